#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcdhv/tape.hpp"

namespace pcdhv {

// Named learnable tensors with gradient and momentum slots.
class ParamSet {
  public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor momentum;
    };

    Tensor& add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;
    Tensor& value(const std::string& name) { return entry(name).value; }

    size_t count() const { return entries_.size(); }
    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    long long scalar_count() const;
    void zero_grad();

    // Tape binding: leaf node per parameter, in insertion order.
    struct Binding {
        std::vector<int> node_ids;
        std::map<std::string, int> by_name;
        int node(const std::string& name) const { return by_name.at(name); }
    };
    Binding inject(Tape& tape) const;
    // Accumulates leaf grads from the tape back into the grad slots.
    void collect_grads(Tape& tape, const Binding& binding);

    // Flat binary container, magic "PCDHV1". Bit-exact round trip.
    void save(const std::string& path) const;
    static ParamSet load(const std::string& path);

  private:
    std::vector<Entry> entries_;
    std::map<std::string, size_t> index_;
};

}  // namespace pcdhv
