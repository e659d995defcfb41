#pragma once

// Self-contained baseline JFIF codec: 4:2:0 chroma subsampling, the
// standard quantization tables scaled by the usual quality mapping
// (scale = 5000/q below 50, 200 - 2q above), standard Huffman tables,
// double-precision DCT. The decoder handles exactly the baseline subset
// the encoder emits (plus 4:4:4) and raises decode_error on anything else.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/image.hpp"

namespace ordeg {
namespace jpegdetail {

inline constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

inline constexpr std::array<int, 64> kBaseLumaQ = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

inline constexpr std::array<int, 64> kBaseChromaQ = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct HuffSpec {
  std::array<std::uint8_t, 16> bits;  // code count per length 1..16
  std::vector<std::uint8_t> values;
};

inline const HuffSpec& dc_luma_spec() {
  static const HuffSpec s{{0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0},
                          {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
  return s;
}

inline const HuffSpec& dc_chroma_spec() {
  static const HuffSpec s{{0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                          {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
  return s;
}

inline const HuffSpec& ac_luma_spec() {
  static const HuffSpec s{
      {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125},
      {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61,
       0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52,
       0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25,
       0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
       0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
       0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83,
       0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99,
       0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
       0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3,
       0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8,
       0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};
  return s;
}

inline const HuffSpec& ac_chroma_spec() {
  static const HuffSpec s{
      {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119},
      {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61,
       0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33,
       0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18,
       0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
       0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63,
       0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a,
       0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97,
       0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
       0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
       0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7,
       0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};
  return s;
}

// Canonical code assignment shared by encoder and decoder.
struct HuffCodes {
  std::array<std::uint16_t, 256> code{};
  std::array<std::uint8_t, 256> size{};
};

inline HuffCodes build_codes(const HuffSpec& spec) {
  HuffCodes out;
  std::uint16_t code = 0;
  std::size_t k = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < spec.bits[len - 1]; ++i) {
      out.code[spec.values[k]] = code;
      out.size[spec.values[k]] = static_cast<std::uint8_t>(len);
      ++code;
      ++k;
    }
    code <<= 1;
  }
  return out;
}

inline std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality) {
  const int scale = quality < 50 ? 5000 / quality : 200 - quality * 2;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * scale + 50) / 100;
    q[i] = v < 1 ? 1 : (v > 255 ? 255 : v);
  }
  return q;
}

inline const std::array<std::array<double, 8>, 8>& dct_matrix() {
  static const auto m = [] {
    std::array<std::array<double, 8>, 8> c{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.5) : 1.0;
      for (int x = 0; x < 8; ++x) {
        c[u][x] = 0.5 * cu * std::cos((2.0 * x + 1.0) * u * M_PI / 16.0);
      }
    }
    return c;
  }();
  return m;
}

inline void fdct8x8(const double in[64], double out[64]) {
  const auto& c = dct_matrix();
  double tmp[64];
  for (int u = 0; u < 8; ++u) {  // rows
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += c[u][k] * in[x * 8 + k];
      tmp[x * 8 + u] = s;
    }
  }
  for (int v = 0; v < 8; ++v) {  // cols
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += c[v][k] * tmp[k * 8 + u];
      out[v * 8 + u] = s;
    }
  }
}

inline void idct8x8(const double in[64], double out[64]) {
  const auto& c = dct_matrix();
  double tmp[64];
  for (int x = 0; x < 8; ++x) {
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += c[k][x] * in[v * 8 + k];
      tmp[v * 8 + x] = s;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) s += c[k][y] * tmp[k * 8 + x];
      out[y * 8 + x] = s;
    }
  }
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t bits, int nbits) {
    acc_ = (acc_ << nbits) | (bits & ((1u << nbits) - 1u));
    nacc_ += nbits;
    while (nacc_ >= 8) {
      const std::uint8_t b = static_cast<std::uint8_t>((acc_ >> (nacc_ - 8)) & 0xff);
      out_.push_back(b);
      if (b == 0xff) out_.push_back(0x00);  // byte stuffing
      nacc_ -= 8;
    }
  }

  void flush() {
    if (nacc_ > 0) {
      const int pad = 8 - nacc_;
      put((1u << pad) - 1u, pad);  // pad with 1s to the byte edge
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint64_t acc_ = 0;
  int nacc_ = 0;
};

inline int bit_category(int v) {
  int a = v < 0 ? -v : v;
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

struct Component {
  Plane plane;      // full-range samples
  int hsamp = 1, vsamp = 1;
};

}  // namespace jpegdetail

inline std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
  using namespace jpegdetail;
  if (quality < 1 || quality > 100) throw invalid_quality_error();
  if (img.width < 1 || img.height < 1) throw image_too_small_error("empty image");

  const auto lumaQ = scaled_table(kBaseLumaQ, quality);
  const auto chromaQ = scaled_table(kBaseChromaQ, quality);

  // color conversion
  const int w = img.width, h = img.height;
  Plane Y(w, h), Cb(w, h), Cr(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
      Y.at(x, y) = 0.299 * r + 0.587 * g + 0.114 * b;
      Cb.at(x, y) = 128.0 - 0.168735892 * r - 0.331264108 * g + 0.5 * b;
      Cr.at(x, y) = 128.0 + 0.5 * r - 0.418687589 * g - 0.081312411 * b;
    }
  }
  // 4:2:0 subsampling by 2x2 box average
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  Plane cb(cw, ch), cr(cw, ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      double sb = 0.0, sr = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = std::min(2 * x + dx, w - 1);
          const int sy = std::min(2 * y + dy, h - 1);
          sb += Cb.at(sx, sy);
          sr += Cr.at(sx, sy);
          ++n;
        }
      }
      cb.at(x, y) = sb / n;
      cr.at(x, y) = sr / n;
    }
  }

  std::vector<std::uint8_t> out;
  auto put16 = [&out](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  };
  auto marker = [&](std::uint8_t id) {
    out.push_back(0xff);
    out.push_back(id);
  };

  marker(0xd8);  // SOI
  marker(0xe0);  // APP0 / JFIF
  put16(16);
  const char jfif[5] = {'J', 'F', 'I', 'F', 0};
  out.insert(out.end(), jfif, jfif + 5);
  out.push_back(1);
  out.push_back(1);  // version 1.1
  out.push_back(0);  // aspect units
  put16(1);
  put16(1);
  out.push_back(0);
  out.push_back(0);  // no thumbnail

  for (int t = 0; t < 2; ++t) {  // DQT
    marker(0xdb);
    put16(67);
    out.push_back(static_cast<std::uint8_t>(t));
    const auto& q = t == 0 ? lumaQ : chromaQ;
    for (int i = 0; i < 64; ++i) out.push_back(static_cast<std::uint8_t>(q[kZigzag[i]]));
  }

  marker(0xc0);  // SOF0, baseline
  put16(17);
  out.push_back(8);
  put16(static_cast<std::uint16_t>(h));
  put16(static_cast<std::uint16_t>(w));
  out.push_back(3);
  out.push_back(1);
  out.push_back(0x22);
  out.push_back(0);  // Y: 2x2 sampling, table 0
  out.push_back(2);
  out.push_back(0x11);
  out.push_back(1);  // Cb
  out.push_back(3);
  out.push_back(0x11);
  out.push_back(1);  // Cr

  const HuffSpec* specs[4] = {&dc_luma_spec(), &ac_luma_spec(), &dc_chroma_spec(), &ac_chroma_spec()};
  const std::uint8_t spec_ids[4] = {0x00, 0x10, 0x01, 0x11};
  for (int i = 0; i < 4; ++i) {  // DHT
    marker(0xc4);
    put16(static_cast<std::uint16_t>(2 + 1 + 16 + specs[i]->values.size()));
    out.push_back(spec_ids[i]);
    for (int l = 0; l < 16; ++l) out.push_back(specs[i]->bits[l]);
    out.insert(out.end(), specs[i]->values.begin(), specs[i]->values.end());
  }

  marker(0xda);  // SOS
  put16(12);
  out.push_back(3);
  out.push_back(1);
  out.push_back(0x00);
  out.push_back(2);
  out.push_back(0x11);
  out.push_back(3);
  out.push_back(0x11);
  out.push_back(0);
  out.push_back(63);
  out.push_back(0);

  const HuffCodes dcl = build_codes(dc_luma_spec());
  const HuffCodes acl = build_codes(ac_luma_spec());
  const HuffCodes dcc = build_codes(dc_chroma_spec());
  const HuffCodes acc = build_codes(ac_chroma_spec());

  BitWriter bw(out);
  int pred[3] = {0, 0, 0};

  auto encode_block = [&](const Plane& plane, int bx, int by, const std::array<int, 64>& qtab,
                          const HuffCodes& dc, const HuffCodes& ac, int comp) {
    double block[64];
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const int sx = std::min(bx + x, plane.width - 1);
        const int sy = std::min(by + y, plane.height - 1);
        block[y * 8 + x] = plane.at(sx, sy) - 128.0;
      }
    }
    double coef[64];
    fdct8x8(block, coef);
    int quant[64];
    for (int i = 0; i < 64; ++i) {
      const double v = coef[kZigzag[i]] / qtab[kZigzag[i]];
      quant[i] = static_cast<int>(std::lround(v));
    }
    // DC
    const int diff = quant[0] - pred[comp];
    pred[comp] = quant[0];
    const int cat = bit_category(diff);
    bw.put(dc.code[cat], dc.size[cat]);
    if (cat > 0) {
      const int bits = diff < 0 ? diff + (1 << cat) - 1 : diff;
      bw.put(static_cast<std::uint32_t>(bits), cat);
    }
    // AC
    int run = 0;
    for (int i = 1; i < 64; ++i) {
      if (quant[i] == 0) {
        ++run;
        continue;
      }
      while (run >= 16) {
        bw.put(ac.code[0xf0], ac.size[0xf0]);  // ZRL
        run -= 16;
      }
      const int acat = bit_category(quant[i]);
      const int sym = (run << 4) | acat;
      bw.put(ac.code[sym], ac.size[sym]);
      const int bits = quant[i] < 0 ? quant[i] + (1 << acat) - 1 : quant[i];
      bw.put(static_cast<std::uint32_t>(bits), acat);
      run = 0;
    }
    if (run > 0) bw.put(ac.code[0x00], ac.size[0x00]);  // EOB
  };

  const int mcux = (w + 15) / 16, mcuy = (h + 15) / 16;
  for (int my = 0; my < mcuy; ++my) {
    for (int mx = 0; mx < mcux; ++mx) {
      for (int v = 0; v < 2; ++v) {
        for (int u = 0; u < 2; ++u) {
          encode_block(Y, mx * 16 + u * 8, my * 16 + v * 8, lumaQ, dcl, acl, 0);
        }
      }
      encode_block(cb, mx * 8, my * 8, chromaQ, dcc, acc, 1);
      encode_block(cr, mx * 8, my * 8, chromaQ, dcc, acc, 2);
    }
  }
  bw.flush();
  marker(0xd9);  // EOI
  return out;
}

namespace jpegdetail {

struct DecHuff {
  std::array<int, 17> mincode{};
  std::array<int, 17> maxcode{};  // -1 when no codes of that length
  std::array<int, 17> valptr{};
  std::vector<std::uint8_t> values;
};

inline DecHuff build_decoder_table(const std::uint8_t bits[16], const std::uint8_t* values, std::size_t nvalues) {
  DecHuff t;
  t.values.assign(values, values + nvalues);
  int code = 0, k = 0;
  for (int len = 1; len <= 16; ++len) {
    if (bits[len - 1] == 0) {
      t.maxcode[len] = -1;
      code <<= 1;
      continue;
    }
    t.valptr[len] = k;
    t.mincode[len] = code;
    code += bits[len - 1];
    k += bits[len - 1];
    t.maxcode[len] = code - 1;
    code <<= 1;
  }
  return t;
}

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  int next_bit() {
    if (navail_ == 0) {
      if (pos_ >= size_) throw decode_error("jpeg bitstream truncated");
      std::uint8_t b = data_[pos_++];
      if (b == 0xff) {
        if (pos_ >= size_) throw decode_error("jpeg bitstream truncated");
        const std::uint8_t m = data_[pos_++];
        if (m != 0x00) throw decode_error("unexpected marker in entropy data");
      }
      acc_ = b;
      navail_ = 8;
    }
    --navail_;
    return (acc_ >> navail_) & 1;
  }

  int receive(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | next_bit();
    return v;
  }

  std::size_t consumed() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::uint8_t acc_ = 0;
  int navail_ = 0;
};

inline int decode_symbol(BitReader& br, const DecHuff& t) {
  int code = 0;
  for (int len = 1; len <= 16; ++len) {
    code = (code << 1) | br.next_bit();
    if (t.maxcode[len] >= 0 && code <= t.maxcode[len] && code >= t.mincode[len]) {
      return t.values[t.valptr[len] + code - t.mincode[len]];
    }
  }
  throw decode_error("invalid huffman code");
}

inline int extend(int v, int n) { return n > 0 && v < (1 << (n - 1)) ? v - (1 << n) + 1 : v; }

}  // namespace jpegdetail

inline Image decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  using namespace jpegdetail;
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw decode_error("jpeg truncated");
  };
  need(2);
  if (bytes[0] != 0xff || bytes[1] != 0xd8) throw decode_error("missing SOI");
  pos = 2;

  std::array<std::array<int, 64>, 4> qtabs{};
  std::array<DecHuff, 4> dc_tabs, ac_tabs;
  std::array<bool, 4> have_q{}, have_dc{}, have_ac{};

  int width = 0, height = 0;
  struct Comp {
    int id = 0, h = 1, v = 1, q = 0, dc = 0, ac = 0;
    Plane plane;
    int bw = 0, bh = 0;  // padded block grid dims
  };
  std::vector<Comp> comps;
  int hmax = 1, vmax = 1;

  while (true) {
    need(2);
    if (bytes[pos] != 0xff) throw decode_error("marker expected");
    const std::uint8_t m = bytes[pos + 1];
    pos += 2;
    if (m == 0xd9) throw decode_error("no scan data before EOI");
    need(2);
    const std::size_t len = (static_cast<std::size_t>(bytes[pos]) << 8) | bytes[pos + 1];
    need(len);
    const std::uint8_t* seg = &bytes[pos + 2];
    const std::size_t seglen = len - 2;

    if (m == 0xdb) {
      std::size_t o = 0;
      while (o < seglen) {
        const int pq = seg[o] >> 4, tq = seg[o] & 15;
        if (pq != 0 || tq > 3) throw decode_error("unsupported DQT");
        ++o;
        for (int i = 0; i < 64; ++i) qtabs[tq][kZigzag[i]] = seg[o + i];
        have_q[tq] = true;
        o += 64;
      }
    } else if (m == 0xc4) {
      std::size_t o = 0;
      while (o < seglen) {
        const int cls = seg[o] >> 4, id = seg[o] & 15;
        if (id > 3) throw decode_error("unsupported DHT slot");
        ++o;
        int total = 0;
        for (int i = 0; i < 16; ++i) total += seg[o + i];
        const DecHuff t = build_decoder_table(seg + o, seg + o + 16, total);
        if (cls == 0) {
          dc_tabs[id] = t;
          have_dc[id] = true;
        } else {
          ac_tabs[id] = t;
          have_ac[id] = true;
        }
        o += 16 + total;
      }
    } else if (m == 0xc0 || m == 0xc1) {
      if (seg[0] != 8) throw decode_error("only 8-bit baseline supported");
      height = (seg[1] << 8) | seg[2];
      width = (seg[3] << 8) | seg[4];
      const int nc = seg[5];
      if (nc != 1 && nc != 3) throw decode_error("unsupported component count");
      comps.resize(nc);
      for (int c = 0; c < nc; ++c) {
        comps[c].id = seg[6 + c * 3];
        comps[c].h = seg[7 + c * 3] >> 4;
        comps[c].v = seg[7 + c * 3] & 15;
        comps[c].q = seg[8 + c * 3];
        hmax = std::max(hmax, comps[c].h);
        vmax = std::max(vmax, comps[c].v);
      }
    } else if (m == 0xda) {
      const int ns = seg[0];
      if (static_cast<std::size_t>(ns) != comps.size()) throw decode_error("partial scans unsupported");
      for (int s = 0; s < ns; ++s) {
        const int cid = seg[1 + s * 2];
        for (auto& c : comps) {
          if (c.id == cid) {
            c.dc = seg[2 + s * 2] >> 4;
            c.ac = seg[2 + s * 2] & 15;
          }
        }
      }
      pos += len;
      break;  // entropy-coded data follows
    } else if (m >= 0xc2 && m <= 0xcf && m != 0xc4 && m != 0xc8 && m != 0xcc) {
      throw decode_error("non-baseline jpeg unsupported");
    } else if (m == 0xdd) {
      throw decode_error("restart intervals unsupported");
    }
    // any other marker (APPn, COM) is skipped
    if (m != 0xda) pos += len;
  }

  if (width <= 0 || height <= 0 || comps.empty()) throw decode_error("missing SOF");
  const int mcu_w = 8 * hmax, mcu_h = 8 * vmax;
  const int mcux = (width + mcu_w - 1) / mcu_w;
  const int mcuy = (height + mcu_h - 1) / mcu_h;
  for (auto& c : comps) {
    c.bw = mcux * c.h;
    c.bh = mcuy * c.v;
    c.plane = Plane(c.bw * 8, c.bh * 8);
    if (!have_q[c.q]) throw decode_error("missing quant table");
    if (!have_dc[c.dc] || !have_ac[c.ac]) throw decode_error("missing huffman table");
  }

  BitReader br(bytes.data() + pos, bytes.size() - pos);
  std::vector<int> pred(comps.size(), 0);
  for (int my = 0; my < mcuy; ++my) {
    for (int mx = 0; mx < mcux; ++mx) {
      for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        Comp& c = comps[ci];
        for (int v = 0; v < c.v; ++v) {
          for (int u = 0; u < c.h; ++u) {
            double coef[64] = {0};
            const int t = decode_symbol(br, dc_tabs[c.dc]);
            int diff = extend(br.receive(t), t);
            pred[ci] += diff;
            coef[0] = static_cast<double>(pred[ci] * qtabs[c.q][0]);
            int k = 1;
            while (k < 64) {
              const int rs = decode_symbol(br, ac_tabs[c.ac]);
              const int run = rs >> 4, size = rs & 15;
              if (size == 0) {
                if (run == 15) {
                  k += 16;
                  continue;
                }
                break;  // EOB
              }
              k += run;
              if (k >= 64) throw decode_error("coefficient index overrun");
              coef[kZigzag[k]] = static_cast<double>(extend(br.receive(size), size) * qtabs[c.q][kZigzag[k]]);
              ++k;
            }
            double block[64];
            idct8x8(coef, block);
            const int px = (mx * c.h + u) * 8, py = (my * c.v + v) * 8;
            for (int y = 0; y < 8; ++y) {
              for (int x = 0; x < 8; ++x) {
                c.plane.at(px + x, py + y) = block[y * 8 + x] + 128.0;
              }
            }
          }
        }
      }
    }
  }

  Image img(width, height);
  auto sample = [&](const Comp& c, int x, int y) {
    const int sx = std::min(x * c.h / hmax, c.plane.width - 1);
    const int sy = std::min(y * c.v / vmax, c.plane.height - 1);
    return c.plane.at(sx, sy);
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (comps.size() == 1) {
        const std::uint8_t g = clamp_u8(sample(comps[0], x, y));
        img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = g;
      } else {
        const double Y = sample(comps[0], x, y);
        const double Cb = sample(comps[1], x, y) - 128.0;
        const double Cr = sample(comps[2], x, y) - 128.0;
        img.at(x, y, 0) = clamp_u8(Y + 1.402 * Cr);
        img.at(x, y, 1) = clamp_u8(Y - 0.344136286 * Cb - 0.714136286 * Cr);
        img.at(x, y, 2) = clamp_u8(Y + 1.772 * Cb);
      }
    }
  }
  return img;
}

}  // namespace ordeg
