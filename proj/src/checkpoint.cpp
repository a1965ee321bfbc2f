#include "kieb/checkpoint.hpp"

#include <cstring>

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

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::byte* p;
  std::size_t n;
  std::size_t pos = 0;

  void need(std::size_t k, const char* what) const {
    if (pos + k > n) throw IoError(std::string("checkpoint truncated at ") + what);
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
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
};

template <typename T>
constexpr Dtype dtype_of() {
  return sizeof(T) == 4 ? Dtype::real32 : Dtype::real64;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(std::byte(c));
  put_u16(out, kTensorFileVersion);
  out.push_back(std::byte(kCheckpointCode));
  out.push_back(std::byte(0));  // reserved
  put_u32(out, std::uint32_t(1 + ckpt.params.size()));

  auto put_section = [&out](const std::string& name, const std::byte* data,
                            std::size_t size) {
    if (name.size() > 0xffff) throw IoError("checkpoint section name too long");
    put_u16(out, std::uint16_t(name.size()));
    for (char c : name) out.push_back(std::byte(c));
    put_u64(out, size);
    out.insert(out.end(), data, data + size);
  };

  put_section("meta", reinterpret_cast<const std::byte*>(ckpt.meta_text.data()),
              ckpt.meta_text.size());
  for (const auto& [name, blob] : ckpt.params) {
    const std::vector<std::byte> enc = encode_tensor(blob);
    put_section(name, enc.data(), enc.size());
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = read_file(path);
  Reader r{bytes.data(), bytes.size()};
  r.need(4, "magic");
  for (char c : kMagic) {
    if (char(r.p[r.pos++]) != c) {
      throw IoError(path.string() + ": not a KIEB file (bad magic)");
    }
  }
  const std::uint16_t version = r.u16("version");
  if (version != kTensorFileVersion) {
    throw IoError(path.string() + ": unsupported version " + std::to_string(version));
  }
  if (r.u8("container code") != kCheckpointCode) {
    throw IoError(path.string() + ": not a checkpoint container");
  }
  r.u8("reserved");
  const std::uint32_t count = r.u32("section count");
  if (count < 1) throw IoError(path.string() + ": checkpoint has no sections");

  Checkpoint ckpt;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint16_t name_len = r.u16("section name length");
    r.need(name_len, "section name");
    std::string name(reinterpret_cast<const char*>(r.p + r.pos), name_len);
    r.pos += name_len;
    const std::uint64_t payload_len = r.u64("section payload length");
    r.need(payload_len, ("section " + name).c_str());
    const std::byte* payload = r.p + r.pos;
    r.pos += payload_len;

    if (s == 0) {
      if (name != "meta") throw IoError(path.string() + ": first section must be meta");
      ckpt.meta_text.assign(reinterpret_cast<const char*>(payload), payload_len);
      try {
        ckpt.meta = ordered_json::parse(ckpt.meta_text);
      } catch (const std::exception& e) {
        throw IoError(path.string() + ": bad meta JSON: " + e.what());
      }
    } else {
      ckpt.params.emplace_back(std::move(name), decode_tensor(payload, payload_len));
    }
  }
  if (r.pos != r.n) throw IoError(path.string() + ": trailing bytes after sections");
  return ckpt;
}

ordered_json net_spec_to_json(const NetSpec& spec) {
  ordered_json blocks = ordered_json::array();
  for (const auto& b : spec.blocks) {
    blocks.push_back({{"width", b.width}, {"downsample", b.downsample}});
  }
  return ordered_json{{"in_channels", spec.in_channels},
                      {"stem_width", spec.stem_width},
                      {"blocks", blocks}};
}

NetSpec net_spec_from_json(const ordered_json& j) {
  NetSpec spec;
  spec.blocks.clear();
  for (const auto& [key, value] : j.items()) {
    if (key == "in_channels") {
      spec.in_channels = value.get<int>();
    } else if (key == "stem_width") {
      spec.stem_width = value.get<int>();
    } else if (key == "blocks") {
      for (const auto& b : value) {
        NetSpec::Block blk;
        for (const auto& [bk, bv] : b.items()) {
          if (bk == "width") {
            blk.width = bv.get<int>();
          } else if (bk == "downsample") {
            blk.downsample = bv.get<bool>();
          } else {
            throw ConfigError("unknown config key: net.blocks." + bk);
          }
        }
        if (blk.width < 1) throw ConfigError("net.blocks.width must be >= 1");
        spec.blocks.push_back(blk);
      }
    } else {
      throw ConfigError("unknown config key: net." + key);
    }
  }
  if (spec.blocks.empty()) throw ConfigError("net.blocks must not be empty");
  if (spec.in_channels < 1 || spec.stem_width < 1) {
    throw ConfigError("net dimensions must be >= 1");
  }
  return spec;
}

template <typename T>
Checkpoint make_checkpoint(const EnergyModel<T>& model, const ordered_json& extra) {
  Checkpoint ckpt;
  ckpt.meta = ordered_json{
      {"format", "kieb-checkpoint"},
      {"domain", domain_name(model.domain)},
      {"precision", dtype_name(dtype_of<T>())},
      {"net", net_spec_to_json(model.net.spec())},
  };
  for (const auto& [key, value] : extra.items()) ckpt.meta[key] = value;
  ckpt.meta_text = ckpt.meta.dump();

  for (const ParamSection& s : model.net.sections()) {
    TensorBlob blob;
    blob.dtype = dtype_of<T>();
    blob.dims = {std::uint32_t(s.shape[0]), std::uint32_t(s.shape[1]),
                 std::uint32_t(s.shape[2]), std::uint32_t(s.shape[3])};
    blob.payload.resize(s.count * sizeof(T));
    std::memcpy(blob.payload.data(), model.net.params().data() + s.offset,
                blob.payload.size());
    ckpt.params.emplace_back("param/" + s.name, std::move(blob));
  }
  return ckpt;
}

template Checkpoint make_checkpoint<float>(const EnergyModel<float>&,
                                           const ordered_json&);
template Checkpoint make_checkpoint<double>(const EnergyModel<double>&,
                                            const ordered_json&);

namespace {

template <typename T>
EnergyModel<T> model_from_checkpoint(const Checkpoint& ckpt, const NetSpec& spec,
                                     Domain domain) {
  EnergyNet<T> net(spec);
  const auto& sections = net.sections();
  if (ckpt.params.size() != sections.size()) {
    throw IoError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                  " parameter sections, architecture needs " +
                  std::to_string(sections.size()));
  }
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& [name, blob] = ckpt.params[i];
    const ParamSection& s = sections[i];
    if (name != "param/" + s.name) {
      throw IoError("checkpoint section order mismatch: expected param/" + s.name +
                    ", found " + name);
    }
    if (blob.dtype != dtype_of<T>()) {
      throw IoError("checkpoint section " + name + " has dtype " +
                    dtype_name(blob.dtype));
    }
    if (blob.element_count() != s.count) {
      throw IoError("checkpoint section " + name + " has wrong element count");
    }
    std::memcpy(net.params().data() + s.offset, blob.payload.data(),
                blob.payload.size());
  }
  return EnergyModel<T>{std::move(net), domain};
}

}  // namespace

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  const std::string domain_str = ckpt.meta.value("domain", "");
  Domain domain;
  if (domain_str == "image") {
    domain = Domain::image;
  } else if (domain_str == "weighted-kspace") {
    domain = Domain::weighted_kspace;
  } else {
    throw IoError(path.string() + ": unknown model domain '" + domain_str + "'");
  }
  if (!ckpt.meta.contains("net")) throw IoError(path.string() + ": meta lacks net");
  const NetSpec spec = net_spec_from_json(ckpt.meta["net"]);
  const std::string precision = ckpt.meta.value("precision", "real32");

  LoadedModel out;
  out.meta = ckpt.meta;
  out.domain = domain;
  if (precision == "real32") {
    out.precision = Dtype::real32;
    out.model = model_from_checkpoint<float>(ckpt, spec, domain);
  } else if (precision == "real64") {
    out.precision = Dtype::real64;
    out.model = model_from_checkpoint<double>(ckpt, spec, domain);
  } else {
    throw IoError(path.string() + ": unknown precision '" + precision + "'");
  }
  return out;
}

}  // namespace kieb
