#include "gifl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gifl/error.hpp"

namespace gifl {

namespace {

constexpr char kMagic[8] = {'G', 'I', 'F', 'L', 'A', 'R', 'C', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw_format("archive truncated");
  return v;
}

}  // namespace

void save_archive(const std::string& path, const nlohmann::json& meta,
                  const std::vector<NamedParam>& arrays) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot write archive: " + path);
  f.write(kMagic, 8);
  const std::string m = meta.dump();
  write_pod<std::uint64_t>(f, m.size());
  f.write(m.data(), static_cast<std::streamsize>(m.size()));
  write_pod<std::uint64_t>(f, arrays.size());
  for (const auto& a : arrays) {
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(a.name.size()));
    f.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    const auto& shape = a.tensor->shape();
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) write_pod<std::int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(a.tensor->data()),
            static_cast<std::streamsize>(a.tensor->size() * static_cast<std::int64_t>(sizeof(double))));
  }
  if (!f) throw_io("archive write failed: " + path);
}

Archive load_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open archive: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) throw_format("not a gifl archive: " + path);
  Archive ar;
  const auto meta_len = read_pod<std::uint64_t>(f);
  std::string m(meta_len, '\0');
  f.read(m.data(), static_cast<std::streamsize>(meta_len));
  if (!f) throw_format("archive truncated");
  ar.meta = nlohmann::json::parse(m, nullptr, false);
  if (ar.meta.is_discarded()) throw_format("archive meta is not valid JSON");
  const auto count = read_pod<std::uint64_t>(f);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(f);
    std::vector<std::int64_t> shape(ndim);
    for (auto& d : shape) d = read_pod<std::int64_t>(f);
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * static_cast<std::int64_t>(sizeof(double))));
    if (!f) throw_format("archive truncated in array " + name);
    ar.arrays.emplace(std::move(name), std::move(t));
  }
  return ar;
}

std::uint64_t json_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace gifl
