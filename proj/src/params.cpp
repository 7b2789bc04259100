#include "pcdhv/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace pcdhv {

static_assert(sizeof(Real) == 8 || sizeof(Real) == 4, "unexpected scalar width");

Tensor& ParamSet::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.dims);
    e.momentum = Tensor::zeros(init.dims);
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.back().value;
}

ParamSet::Entry& ParamSet::entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second];
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second];
}

long long ParamSet::scalar_count() const {
    long long n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamSet::zero_grad() {
    for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), Real(0));
}

ParamSet::Binding ParamSet::inject(Tape& tape) const {
    Binding b;
    for (const auto& e : entries_) {
        const int id = tape.leaf(e.value);
        b.node_ids.push_back(id);
        b.by_name[e.name] = id;
    }
    return b;
}

void ParamSet::collect_grads(Tape& tape, const Binding& binding) {
    for (size_t i = 0; i < entries_.size(); ++i) {
        const int id = binding.node_ids[i];
        if (!tape.has_grad(id)) continue;
        const Tensor& g = tape.grad(id);
        for (size_t j = 0; j < g.data.size(); ++j) entries_[i].grad.data[j] += g.data[j];
    }
}

namespace {

constexpr char kMagic[6] = {'P', 'C', 'D', 'H', 'V', '1'};

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void ParamSet::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_u64(os, entries_.size());
    for (const auto& e : entries_) {
        write_u64(os, e.name.size());
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_u64(os, e.value.dims.size());
        for (int d : e.value.dims) write_u64(os, static_cast<uint64_t>(d));
        // scalars little-endian; this targets little-endian hosts
        os.write(reinterpret_cast<const char*>(e.value.data.data()),
                 static_cast<std::streamsize>(e.value.data.size() * sizeof(Real)));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

ParamSet ParamSet::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, kMagic, 6) != 0) throw std::runtime_error("bad parameter container magic: " + path);
    const uint64_t n = read_u64(is);
    ParamSet ps;
    for (uint64_t i = 0; i < n; ++i) {
        const uint64_t len = read_u64(is);
        std::string name(len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(len));
        const uint64_t rank = read_u64(is);
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(read_u64(is));
        Tensor v(dims);
        is.read(reinterpret_cast<char*>(v.data.data()), static_cast<std::streamsize>(v.data.size() * sizeof(Real)));
        if (!is) throw std::runtime_error("truncated parameter container: " + path);
        ps.add(name, std::move(v));
    }
    return ps;
}

}  // namespace pcdhv
