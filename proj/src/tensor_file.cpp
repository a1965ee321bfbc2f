#include "kieb/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <random>

#include "kieb/errors.hpp"

namespace kieb {
namespace {

constexpr char kMagic[4] = {'K', 'I', 'E', 'B'};

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(std::byte(v & 0xff));
  out.push_back(std::byte((v >> 8) & 0xff));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::byte* p;
  std::size_t n;
  std::size_t pos = 0;

  void need(std::size_t k, const char* what) const {
    if (pos + k > n) throw IoError(std::string("tensor file truncated at ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return std::uint8_t(p[pos++]);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = std::uint16_t(p[pos]) | (std::uint16_t(p[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
};

template <typename T>
std::vector<std::byte> pack(const T* data, std::size_t count) {
  std::vector<std::byte> out(count * sizeof(T));
  std::memcpy(out.data(), data, out.size());
  return out;
}

template <typename T>
void unpack(const TensorBlob& blob, T* out, std::size_t count) {
  std::memcpy(out, blob.payload.data(), count * sizeof(T));
}

void require_dtype(const TensorBlob& b, Dtype want, const char* what) {
  if (b.dtype != want) {
    throw IoError(std::string(what) + ": expected dtype " + dtype_name(want) +
                  ", file has " + dtype_name(b.dtype));
  }
}

void require_ndim(const TensorBlob& b, std::size_t want, const char* what) {
  if (b.dims.size() != want) {
    throw IoError(std::string(what) + ": expected " + std::to_string(want) +
                  " dims, file has " + std::to_string(b.dims.size()));
  }
}

}  // namespace

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::real32: return 4;
    case Dtype::real64: return 8;
    case Dtype::complex64: return 8;
    case Dtype::complex128: return 16;
  }
  throw IoError("unknown dtype code");
}

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::real32: return "real32";
    case Dtype::real64: return "real64";
    case Dtype::complex64: return "complex64";
    case Dtype::complex128: return "complex128";
  }
  return "?";
}

std::size_t TensorBlob::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

std::vector<std::byte> encode_tensor(const TensorBlob& blob) {
  if (blob.dims.empty() || blob.dims.size() > 255) {
    throw IoError("encode_tensor: bad rank");
  }
  if (blob.payload.size() != blob.element_count() * dtype_size(blob.dtype)) {
    throw IoError("encode_tensor: payload length does not match dims");
  }
  std::vector<std::byte> out;
  out.reserve(8 + 4 * blob.dims.size() + blob.payload.size());
  for (char c : kMagic) out.push_back(std::byte(c));
  put_u16(out, kTensorFileVersion);
  out.push_back(std::byte(static_cast<std::uint8_t>(blob.dtype)));
  out.push_back(std::byte(static_cast<std::uint8_t>(blob.dims.size())));
  for (std::uint32_t d : blob.dims) put_u32(out, d);
  out.insert(out.end(), blob.payload.begin(), blob.payload.end());
  return out;
}

TensorBlob decode_tensor(const std::byte* data, std::size_t size) {
  Reader r{data, size};
  r.need(4, "magic");
  for (char c : kMagic) {
    if (char(r.p[r.pos++]) != c) throw IoError("not a KIEB tensor file (bad magic)");
  }
  const std::uint16_t version = r.u16("version");
  if (version != kTensorFileVersion) {
    throw IoError("unsupported tensor file version " + std::to_string(version));
  }
  const std::uint8_t code = r.u8("dtype");
  if (code > 3) {
    throw IoError(code == kCheckpointCode
                      ? "file is a checkpoint container, not a tensor"
                      : "unknown dtype code " + std::to_string(code));
  }
  TensorBlob blob;
  blob.dtype = static_cast<Dtype>(code);
  const std::uint8_t ndim = r.u8("ndim");
  for (int i = 0; i < ndim; ++i) blob.dims.push_back(r.u32("dims"));
  const std::size_t expect = blob.element_count() * dtype_size(blob.dtype);
  if (size - r.pos != expect) {
    throw IoError("tensor payload length mismatch: expected " +
                  std::to_string(expect) + " bytes, have " +
                  std::to_string(size - r.pos));
  }
  blob.payload.assign(data + r.pos, data + size);
  return blob;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::byte>& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::vector<std::byte> bytes(text.size());
  std::memcpy(bytes.data(), text.data(), text.size());
  write_file_atomic(path, bytes);
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("short read from " + path.string());
  return bytes;
}

void write_tensor_file(const std::filesystem::path& path, const TensorBlob& blob) {
  write_file_atomic(path, encode_tensor(blob));
}

TensorBlob read_tensor_file(const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = read_file(path);
  try {
    return decode_tensor(bytes.data(), bytes.size());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

TensorBlob to_blob(const RealImage& img) {
  TensorBlob b;
  b.dtype = Dtype::real64;
  b.dims = {std::uint32_t(img.h), std::uint32_t(img.w)};
  b.payload = pack(img.data.data(), img.data.size());
  return b;
}

TensorBlob to_blob(const ComplexImage& img) {
  TensorBlob b;
  b.dtype = Dtype::complex128;
  b.dims = {std::uint32_t(img.h), std::uint32_t(img.w)};
  b.payload = pack(img.data.data(), img.data.size());
  return b;
}

TensorBlob to_blob(const CoilStack& stack) {
  TensorBlob b;
  b.dtype = Dtype::complex128;
  b.dims = {std::uint32_t(stack.coils), std::uint32_t(stack.h), std::uint32_t(stack.w)};
  b.payload = pack(stack.data.data(), stack.data.size());
  return b;
}

TensorBlob to_blob(const SamplingMask& mask) {
  TensorBlob b;
  b.dtype = Dtype::real32;
  b.dims = {std::uint32_t(mask.h), std::uint32_t(mask.w)};
  std::vector<float> vals(mask.pattern.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = mask.pattern[i] ? 1.f : 0.f;
  b.payload = pack(vals.data(), vals.size());
  return b;
}

TensorBlob to_blob(const WeightMatrix& w) {
  TensorBlob b;
  b.dtype = Dtype::real64;
  b.dims = {std::uint32_t(w.h), std::uint32_t(w.w)};
  b.payload = pack(w.values.data(), w.values.size());
  return b;
}

TensorBlob to_blob(const Tensor4<float>& t) {
  TensorBlob b;
  b.dtype = Dtype::real32;
  b.dims = {std::uint32_t(t.batch()), std::uint32_t(t.channels()),
            std::uint32_t(t.height()), std::uint32_t(t.width())};
  b.payload = pack(t.data(), t.size());
  return b;
}

TensorBlob to_blob(const Tensor4<double>& t) {
  TensorBlob b;
  b.dtype = Dtype::real64;
  b.dims = {std::uint32_t(t.batch()), std::uint32_t(t.channels()),
            std::uint32_t(t.height()), std::uint32_t(t.width())};
  b.payload = pack(t.data(), t.size());
  return b;
}

RealImage image_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::real64, "real image");
  require_ndim(blob, 2, "real image");
  RealImage img(int(blob.dims[0]), int(blob.dims[1]));
  unpack(blob, img.data.data(), img.data.size());
  return img;
}

ComplexImage complex_image_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::complex128, "complex image");
  require_ndim(blob, 2, "complex image");
  ComplexImage img(int(blob.dims[0]), int(blob.dims[1]));
  unpack(blob, img.data.data(), img.data.size());
  return img;
}

CoilStack coil_stack_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::complex128, "coil stack");
  require_ndim(blob, 3, "coil stack");
  CoilStack s(int(blob.dims[0]), int(blob.dims[1]), int(blob.dims[2]));
  unpack(blob, s.data.data(), s.data.size());
  return s;
}

SamplingMask mask_pattern_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::real32, "sampling mask");
  require_ndim(blob, 2, "sampling mask");
  SamplingMask m;
  m.h = int(blob.dims[0]);
  m.w = int(blob.dims[1]);
  std::vector<float> vals(m.h * std::size_t(m.w));
  unpack(blob, vals.data(), vals.size());
  m.pattern.resize(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] != 0.f && vals[i] != 1.f) {
      throw IoError("sampling mask entries must be 0 or 1");
    }
    m.pattern[i] = vals[i] != 0.f ? 1 : 0;
  }
  const double density = m.density();
  m.accel = density > 0.0 ? std::max(1, int(std::lround(1.0 / density))) : 1;
  return m;
}

Tensor4<float> tensor4f_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::real32, "tensor4");
  require_ndim(blob, 4, "tensor4");
  Tensor4<float> t(int(blob.dims[0]), int(blob.dims[1]), int(blob.dims[2]),
                   int(blob.dims[3]));
  unpack(blob, t.data(), t.size());
  return t;
}

Tensor4<double> tensor4d_from_blob(const TensorBlob& blob) {
  require_dtype(blob, Dtype::real64, "tensor4");
  require_ndim(blob, 4, "tensor4");
  Tensor4<double> t(int(blob.dims[0]), int(blob.dims[1]), int(blob.dims[2]),
                    int(blob.dims[3]));
  unpack(blob, t.data(), t.size());
  return t;
}

}  // namespace kieb
