#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcdhv/tensor.hpp"

namespace pcdhv {

// Flat key=value configuration. Every key has a documented default; unknown
// keys are rejected at parse time.
class Config {
  public:
    Config();  // defaults

    static Config from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);  // rejects unknown keys

    const std::string& str(const std::string& key) const;
    int integer(const std::string& key) const;
    double real(const std::string& key) const;
    std::vector<double> real_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }
    static std::string describe_keys();

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace pcdhv
