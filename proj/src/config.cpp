#include "pcdhv/config.hpp"

#include <fstream>
#include <sstream>

namespace pcdhv {

namespace {

struct KeyDoc {
    const char* key;
    const char* def;
    const char* doc;
};

// Defaults follow the reference setup where it states a value.
const KeyDoc kKeys[] = {
    {"arch", "toy8", "backbone architecture: toy8 | toy8s | micro"},
    {"channels", "16", "backbone output channels C (must be divisible by groups)"},
    {"groups", "8", "channel groups N for group pixel-level correlation"},
    {"regions", "9", "vote-field region count R"},
    {"vote_field_extent", "17", "vote-field kernel extent H0 (odd)"},
    {"vote_field_radii", "1,4,8", "strictly increasing ring radii"},
    {"vote_field_angle_bins", "4", "angle bins per annulus"},
    {"vote_gen_width1", "128", "vote generation 1x1 reduction width"},
    {"vote_gen_width2", "64", "vote generation second 1x1 width"},
    {"vote_gen_width3", "64", "vote generation first 3x3 width"},
    {"vote_gen_width4", "32", "vote generation second 3x3 width"},
    {"template_size", "127", "template crop size in pixels"},
    {"search_size", "303", "search crop size in pixels"},
    {"smoothing", "0.3", "target size linear-interpolation factor gamma"},
    {"iou_threshold", "0.5", "minimum corner IoU d for the gaussian radius"},
    {"lr_start", "1e-6", "warmup start learning rate"},
    {"lr_peak", "1e-3", "peak learning rate (8e-3 in the full-scale setup)"},
    {"warmup_frac", "0.125", "fraction of steps spent in linear warmup"},
    {"momentum", "0.9", "SGD momentum"},
    {"weight_decay", "1e-4", "SGD weight decay"},
    {"batch_size", "8", "training pairs per step"},
    {"steps", "1000", "training steps"},
    {"seed", "1", "RNG seed"},
    {"init", "he", "weight init: he | gauss (gauss = zero-centered, std 0.01)"},
    {"correlation", "group", "correlation mode: group | depthwise (ablation baseline)"},
    {"refine_upsample", "1", "1 = pixel-shuffle/bilinear expansion in refinement, 0 = ablation without it"},
    {"frame_size", "160", "synthetic frame size (>= 128)"},
    {"n_frames", "20", "synthetic frames per sequence"},
    {"difficulty", "0", "synthetic difficulty (0 = no distractors, no scale drift)"},
    {"pair_max_gap", "100", "max frame gap between template and search frames"},
    {"workers", "1", "thread count; 1 guarantees bit-reproducibility"},
};

bool known(const std::string& key) {
    for (const auto& k : kKeys)
        if (key == k.key) return true;
    return false;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config() {
    for (const auto& k : kKeys) values_[k.key] = k.def;
}

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
}

const std::string& Config::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

int Config::integer(const std::string& key) const {
    const std::string& s = str(key);
    size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (...) {
        throw ConfigError("config key " + key + ": not an integer: " + s);
    }
    if (pos != s.size()) throw ConfigError("config key " + key + ": not an integer: " + s);
    return v;
}

double Config::real(const std::string& key) const {
    const std::string& s = str(key);
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (...) {
        throw ConfigError("config key " + key + ": not a number: " + s);
    }
    if (pos != s.size()) throw ConfigError("config key " + key + ": not a number: " + s);
    return v;
}

std::vector<double> Config::real_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ConfigError("config key " + key + ": bad list element: " + item);
        }
    }
    return out;
}

std::string Config::describe_keys() {
    std::string out;
    for (const auto& k : kKeys) {
        out += "  ";
        out += k.key;
        out += " (default ";
        out += k.def;
        out += "): ";
        out += k.doc;
        out += "\n";
    }
    return out;
}

}  // namespace pcdhv
