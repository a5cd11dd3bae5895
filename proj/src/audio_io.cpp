#include "rotpad/audio_io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "rotpad/errors.h"

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

namespace rotpad {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

// KSDATAFORMAT_SUBTYPE_* share this tail after the 2-byte format code.
constexpr std::array<std::uint8_t, 14> kGuidTail = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                                    0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};

struct SpeakerBit {
  const char* label;
  std::uint32_t bit;
};

constexpr std::array<SpeakerBit, 11> kSpeakers = {{{"FL", 0x1},
                                                   {"FR", 0x2},
                                                   {"C", 0x4},
                                                   {"LFE", 0x8},
                                                   {"BL", 0x10},
                                                   {"BR", 0x20},
                                                   {"FLC", 0x40},
                                                   {"FRC", 0x80},
                                                   {"BC", 0x100},
                                                   {"SL", 0x200},
                                                   {"SR", 0x400}}};

std::optional<std::uint32_t> speaker_bit(const std::string& label) {
  for (const auto& s : kSpeakers)
    if (label == s.label) return s.bit;
  return std::nullopt;
}

// Mask for a layout, or 0 if it cannot be expressed (unknown label, or order
// that differs from the canonical bit order WAV mandates).
std::uint32_t layout_mask(const std::vector<std::string>& layout) {
  std::uint32_t mask = 0;
  std::uint32_t last = 0;
  for (const auto& label : layout) {
    auto bit = speaker_bit(label);
    if (!bit || *bit <= last) return 0;
    mask |= *bit;
    last = *bit;
  }
  return mask;
}

std::vector<std::string> layout_from_mask(std::uint32_t mask, std::size_t channels) {
  std::vector<std::string> out;
  for (const auto& s : kSpeakers)
    if (mask & s.bit) out.emplace_back(s.label);
  if (out.size() != channels) return default_layout(channels);
  return out;
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated ") + what);
  }
  std::uint16_t u16() {
    need(2, "field");
    std::uint16_t v = std::uint16_t(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4, "field");
    std::uint32_t v = std::uint32_t(bytes_[pos_]) | (std::uint32_t(bytes_[pos_ + 1]) << 8) |
                      (std::uint32_t(bytes_[pos_ + 2]) << 16) |
                      (std::uint32_t(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  std::string tag() {
    need(4, "chunk tag");
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { pos_ += std::min(n, remaining()); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct FmtInfo {
  std::uint16_t code = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
  std::uint32_t mask = 0;
};

FmtInfo parse_fmt(std::span<const std::uint8_t> chunk) {
  ByteReader r(chunk);
  FmtInfo f;
  r.need(16, "fmt chunk");
  f.code = r.u16();
  f.channels = r.u16();
  f.rate = r.u32();
  r.u32();  // byte rate
  f.block_align = r.u16();
  f.bits = r.u16();
  if (f.code == kFormatExtensible) {
    r.need(24, "extensible fmt chunk");
    r.u16();  // cbSize
    r.u16();  // valid bits
    f.mask = r.u32();
    auto guid = r.take(16, "subformat");
    if (!std::equal(kGuidTail.begin(), kGuidTail.end(), guid.begin() + 2))
      throw UnsupportedFormat("unknown extensible subformat");
    f.code = std::uint16_t(guid[0] | (guid[1] << 8));
  }
  return f;
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xFF));
  out.push_back(char(v >> 8));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

}  // namespace

AudioBuffer::AudioBuffer(std::size_t channels, std::size_t frames, int rate)
    : sample_rate(rate),
      layout(default_layout(channels)),
      samples(channels, std::vector<double>(frames, 0.0)) {}

void AudioBuffer::validate() const {
  if (samples.empty() || samples.size() > 6)
    throw InvalidArgument("channel count must be 1-6, got " + std::to_string(samples.size()));
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  if (layout.size() != samples.size())
    throw InvalidArgument("layout has " + std::to_string(layout.size()) + " labels for " +
                          std::to_string(samples.size()) + " channels");
  for (const auto& ch : samples)
    if (ch.size() != samples.front().size())
      throw InvalidArgument("channels have unequal length");
}

SampleFormat parse_sample_format(const std::string& name) {
  if (name == "pcm16") return SampleFormat::Pcm16;
  if (name == "pcm24") return SampleFormat::Pcm24;
  if (name == "float32") return SampleFormat::Float32;
  throw InvalidArgument("unknown sample format '" + name + "'");
}

std::vector<std::string> default_layout(std::size_t channels) {
  switch (channels) {
    case 1: return {"C"};
    case 2: return {"FL", "FR"};
    case 4: return {"FL", "FR", "SL", "SR"};
    case 6: return {"FL", "FR", "C", "LFE", "SL", "SR"};
    default: break;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < channels; ++i) out.push_back("CH" + std::to_string(i + 1));
  return out;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 12) throw ParseError("file shorter than RIFF header");
  if (r.tag() != "RIFF") throw UnsupportedFormat("not a RIFF file");
  r.u32();
  if (r.tag() != "WAVE") throw UnsupportedFormat("RIFF form is not WAVE");

  std::optional<FmtInfo> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  while (r.remaining() >= 8 && !data) {
    std::string id = r.tag();
    std::uint32_t size = r.u32();
    if (id == "fmt ") {
      fmt = parse_fmt(r.take(size, "fmt chunk"));
      if (size & 1) r.skip(1);
    } else if (id == "data") {
      if (!fmt) throw ParseError("data chunk precedes fmt chunk");
      data = r.take(size, "data chunk");
    } else {
      r.need(size, "chunk");
      r.skip(size + (size & 1));
    }
  }
  if (!fmt) throw ParseError("missing fmt chunk");
  if (!data) throw ParseError("missing data chunk");

  const bool pcm16 = fmt->code == kFormatPcm && fmt->bits == 16;
  const bool pcm24 = fmt->code == kFormatPcm && fmt->bits == 24;
  const bool f32 = fmt->code == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !pcm24 && !f32)
    throw UnsupportedFormat("format code " + std::to_string(fmt->code) + " with " +
                            std::to_string(fmt->bits) + " bits");
  if (fmt->channels == 0 || fmt->channels > 6)
    throw UnsupportedFormat(std::to_string(fmt->channels) + " channels");
  const std::size_t width = fmt->bits / 8;
  const std::size_t frame_bytes = width * fmt->channels;
  if (fmt->block_align != frame_bytes) throw ParseError("block align mismatch");
  if (data->size() % frame_bytes != 0) throw ParseError("truncated sample frame");

  const std::size_t frames = data->size() / frame_bytes;
  AudioBuffer buf(fmt->channels, frames, int(fmt->rate));
  buf.layout = fmt->mask ? layout_from_mask(fmt->mask, fmt->channels)
                         : default_layout(fmt->channels);
  const std::uint8_t* p = data->data();
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < fmt->channels; ++c, p += width) {
      double v;
      if (pcm16) {
        v = double(std::int16_t(p[0] | (p[1] << 8))) / 32768.0;
      } else if (pcm24) {
        std::int32_t s = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) | (std::int32_t(p[2]) << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = double(s) / 8388608.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      }
      buf.samples[c][n] = v;
    }
  }
  return buf;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::string encode_wav(const AudioBuffer& buf, SampleFormat format, WriteReport* report) {
  buf.validate();
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : format == SampleFormat::Pcm24 ? 24 : 32;
  const std::uint16_t code = format == SampleFormat::Float32 ? kFormatFloat : kFormatPcm;
  const std::uint16_t channels = std::uint16_t(buf.channels());
  const std::uint16_t block_align = std::uint16_t(channels * bits / 8);
  const std::size_t data_bytes = std::size_t(block_align) * buf.frames();
  if (data_bytes > 0xFFFFFFFFull - 128) throw Error("audio too long for RIFF/WAVE");

  const std::uint32_t mask = layout_mask(buf.layout);
  const bool extensible = channels > 2 || bits > 16;
  const bool need_fact = code == kFormatFloat;

  std::string fmt;
  put16(fmt, extensible ? kFormatExtensible : code);
  put16(fmt, channels);
  put32(fmt, std::uint32_t(buf.sample_rate));
  put32(fmt, std::uint32_t(buf.sample_rate) * block_align);
  put16(fmt, block_align);
  put16(fmt, bits);
  if (extensible) {
    put16(fmt, 22);
    put16(fmt, bits);
    put32(fmt, mask);
    put16(fmt, code);
    fmt.append(reinterpret_cast<const char*>(kGuidTail.data()), kGuidTail.size());
  } else if (need_fact) {
    put16(fmt, 0);
  }

  std::string out;
  out.reserve(64 + data_bytes);
  out += "RIFF";
  const std::size_t riff_size = 4 + 8 + fmt.size() + (need_fact ? 12 : 0) + 8 + data_bytes + (data_bytes & 1);
  put32(out, std::uint32_t(riff_size));
  out += "WAVE";
  out += "fmt ";
  put32(out, std::uint32_t(fmt.size()));
  out += fmt;
  if (need_fact) {
    out += "fact";
    put32(out, 4);
    put32(out, std::uint32_t(buf.frames()));
  }
  out += "data";
  put32(out, std::uint32_t(data_bytes));

  std::size_t clipped = 0;
  auto quantize = [&](double v, double scale, double lo, double hi) {
    if (!std::isfinite(v)) {
      ++clipped;
      return 0.0;
    }
    if (v > 1.0 || v < -1.0) ++clipped;
    return std::clamp(std::nearbyint(v * scale), lo, hi);
  };

  for (std::size_t n = 0; n < buf.frames(); ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = buf.samples[c][n];
      switch (format) {
        case SampleFormat::Pcm16: {
          auto s = std::int16_t(quantize(v, 32768.0, -32768.0, 32767.0));
          put16(out, std::uint16_t(s));
          break;
        }
        case SampleFormat::Pcm24: {
          auto s = std::int32_t(quantize(v, 8388608.0, -8388608.0, 8388607.0));
          auto u = std::uint32_t(s);
          out.push_back(char(u & 0xFF));
          out.push_back(char((u >> 8) & 0xFF));
          out.push_back(char((u >> 16) & 0xFF));
          break;
        }
        case SampleFormat::Float32: {
          float f = float(v);
          std::uint32_t u;
          std::memcpy(&u, &f, 4);
          put32(out, u);
          break;
        }
      }
    }
  }
  if (data_bytes & 1) out.push_back('\0');
  if (report) report->clipped_samples = clipped;
  return out;
}

WriteReport write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      SampleFormat format) {
  WriteReport report;
  const std::string bytes = encode_wav(buf, format, &report);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
  return report;
}

AudioBuffer quad_to_surround51(const AudioBuffer& quad) {
  quad.validate();
  if (quad.channels() != 4) throw InvalidArgument("5.1 export expects a 4-channel render");
  AudioBuffer out(6, quad.frames(), quad.sample_rate);
  out.samples[0] = quad.samples[0];
  out.samples[1] = quad.samples[1];
  out.samples[4] = quad.samples[2];
  out.samples[5] = quad.samples[3];
  return out;
}

}  // namespace rotpad
