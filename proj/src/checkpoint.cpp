#include "gcrl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gcrl {
namespace {

constexpr char kMagic[8] = {'G', 'C', 'R', 'L', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename T>
  T pod() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  void raw(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) throw Error("checkpoint is truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

Record& Container::insert(const std::string& name) {
  auto [it, fresh] = records_.try_emplace(name);
  if (fresh) order_.push_back(name);
  it->second = Record{};
  return it->second;
}

void Container::put_f64(const std::string& name, std::vector<double> values, std::vector<std::uint64_t> dims) {
  if (dims.empty()) dims = {values.size()};
  if (element_count(dims) != values.size()) throw DimensionError("put_f64: dims do not match value count");
  Record& r = insert(name);
  r.kind = Record::Kind::f64;
  r.dims = std::move(dims);
  r.f64 = std::move(values);
}

void Container::put_i64(const std::string& name, std::vector<std::int64_t> values) {
  Record& r = insert(name);
  r.kind = Record::Kind::i64;
  r.dims = {values.size()};
  r.i64 = std::move(values);
}

void Container::put_text(const std::string& name, std::string value) {
  Record& r = insert(name);
  r.kind = Record::Kind::text;
  r.dims = {value.size()};
  r.text = std::move(value);
}

bool Container::has(const std::string& name) const { return records_.count(name) != 0; }

const Record& Container::get(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw Error("checkpoint has no record '" + name + "'");
  return it->second;
}

const std::vector<double>& Container::f64(const std::string& name) const {
  const auto& r = get(name);
  if (r.kind != Record::Kind::f64) throw Error("checkpoint record '" + name + "' is not float64");
  return r.f64;
}

const std::vector<std::int64_t>& Container::i64(const std::string& name) const {
  const auto& r = get(name);
  if (r.kind != Record::Kind::i64) throw Error("checkpoint record '" + name + "' is not int64");
  return r.i64;
}

const std::string& Container::text(const std::string& name) const {
  const auto& r = get(name);
  if (r.kind != Record::Kind::text) throw Error("checkpoint record '" + name + "' is not text");
  return r.text;
}

std::int64_t Container::scalar_i64(const std::string& name) const {
  const auto& v = i64(name);
  if (v.size() != 1) throw Error("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}

double Container::scalar_f64(const std::string& name) const {
  const auto& v = f64(name);
  if (v.size() != 1) throw Error("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}

std::vector<std::uint8_t> Container::serialize() const {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(version_);
  w.pod<std::uint64_t>(order_.size());
  for (const auto& name : order_) {
    const Record& r = records_.at(name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(r.kind));
    w.pod<std::uint64_t>(r.dims.size());
    for (auto d : r.dims) w.pod<std::uint64_t>(d);
    switch (r.kind) {
      case Record::Kind::f64:
        w.raw(r.f64.data(), r.f64.size() * sizeof(double));
        break;
      case Record::Kind::i64:
        w.raw(r.i64.data(), r.i64.size() * sizeof(std::int64_t));
        break;
      case Record::Kind::text:
        w.raw(r.text.data(), r.text.size());
        break;
    }
  }
  return std::move(w.bytes);
}

Container Container::deserialize(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  char magic[8];
  rd.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not a checkpoint file (bad magic)");
  Container c;
  c.version_ = rd.pod<std::uint32_t>();
  if (c.version_ != kCheckpointFormatVersion) {
    throw Error("unsupported checkpoint format version " + std::to_string(c.version_));
  }
  const auto count = rd.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = rd.pod<std::uint32_t>();
    std::string name(name_len, '\0');
    rd.raw(name.data(), name_len);
    if (c.has(name)) throw Error("duplicate checkpoint record '" + name + "'");
    Record& r = c.insert(name);
    const auto kind = rd.pod<std::uint8_t>();
    if (kind > 2) throw Error("bad record kind in '" + name + "'");
    r.kind = static_cast<Record::Kind>(kind);
    const auto rank = rd.pod<std::uint64_t>();
    if (rank > 8) throw Error("bad record rank in '" + name + "'");
    r.dims.resize(rank);
    for (auto& d : r.dims) d = rd.pod<std::uint64_t>();
    const auto n = element_count(r.dims);
    if (n > bytes.size()) throw Error("checkpoint is truncated");
    switch (r.kind) {
      case Record::Kind::f64:
        r.f64.resize(n);
        rd.raw(r.f64.data(), n * sizeof(double));
        break;
      case Record::Kind::i64:
        r.i64.resize(n);
        rd.raw(r.i64.data(), n * sizeof(std::int64_t));
        break;
      case Record::Kind::text:
        r.text.resize(n);
        rd.raw(r.text.data(), n);
        break;
    }
  }
  if (!rd.done()) throw Error("trailing bytes after checkpoint records");
  return c;
}

void Container::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

Container Container::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void put_mlp(Container& c, const std::string& prefix, const Mlp& net) {
  std::vector<std::int64_t> dims(net.layer_dims().begin(), net.layer_dims().end());
  c.put_i64(prefix + ".layer_dims", std::move(dims));
  c.put_text(prefix + ".activation", net.output_activation() == OutputActivation::linear ? "linear" : "scaled_tanh");
  c.put_f64(prefix + ".bound", {net.output_bound()});
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& l = net.layer(i);
    c.put_f64(prefix + ".W" + std::to_string(i), std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size()),
              {static_cast<std::uint64_t>(l.weights.rows()), static_cast<std::uint64_t>(l.weights.cols())});
    c.put_f64(prefix + ".b" + std::to_string(i), std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
}

Mlp get_mlp(const Container& c, const std::string& prefix) {
  const auto& d = c.i64(prefix + ".layer_dims");
  std::vector<int> dims(d.begin(), d.end());
  const auto& act = c.text(prefix + ".activation");
  OutputActivation out;
  if (act == "linear") {
    out = OutputActivation::linear;
  } else if (act == "scaled_tanh") {
    out = OutputActivation::scaled_tanh;
  } else {
    throw Error("unknown activation '" + act + "'");
  }
  Mlp net(dims, out, c.scalar_f64(prefix + ".bound"));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& l = net.layer(i);
    const auto& w = c.f64(prefix + ".W" + std::to_string(i));
    const auto& b = c.f64(prefix + ".b" + std::to_string(i));
    if (w.size() != static_cast<std::size_t>(l.weights.size()) || b.size() != static_cast<std::size_t>(l.bias.size())) {
      throw Error("checkpoint layer shape mismatch in '" + prefix + "'");
    }
    std::copy(w.begin(), w.end(), l.weights.data());
    std::copy(b.begin(), b.end(), l.bias.data());
  }
  return net;
}

void put_adam(Container& c, const std::string& prefix, const AdamState& opt) {
  c.put_f64(prefix + ".hyper", {opt.lr, opt.beta1, opt.beta2, opt.epsilon});
  c.put_i64(prefix + ".step_count", {opt.step_count});
  c.put_f64(prefix + ".m", opt.m);
  c.put_f64(prefix + ".v", opt.v);
}

AdamState get_adam(const Container& c, const std::string& prefix) {
  AdamState opt;
  const auto& h = c.f64(prefix + ".hyper");
  if (h.size() != 4) throw Error("bad optimizer record '" + prefix + "'");
  opt.lr = h[0];
  opt.beta1 = h[1];
  opt.beta2 = h[2];
  opt.epsilon = h[3];
  opt.step_count = c.scalar_i64(prefix + ".step_count");
  opt.m = c.f64(prefix + ".m");
  opt.v = c.f64(prefix + ".v");
  if (opt.m.size() != opt.v.size()) throw Error("optimizer moment size mismatch in '" + prefix + "'");
  return opt;
}

}  // namespace gcrl
