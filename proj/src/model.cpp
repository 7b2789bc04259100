#include "pcdhv/model.hpp"

#include "pcdhv/ops.hpp"

namespace pcdhv {

Model Model::build(const Config& cfg) {
    Model m;
    m.cfg_ = cfg;
    m.backbone_ = Backbone::make(cfg);
    m.groups_ = cfg.integer("groups");
    m.group_corr_ = cfg.str("correlation") == "group";
    if (!m.group_corr_ && cfg.str("correlation") != "depthwise")
        throw ConfigError("correlation must be group or depthwise");
    m.refine_upsample_ = cfg.integer("refine_upsample") != 0;
    m.widths_ = {cfg.integer("vote_gen_width1"), cfg.integer("vote_gen_width2"), cfg.integer("vote_gen_width3"),
                 cfg.integer("vote_gen_width4")};

    const int R = cfg.integer("regions");
    m.field_ = voting::VoteField::build(R, cfg.integer("vote_field_extent"), cfg.real_list("vote_field_radii"),
                                        cfg.integer("vote_field_angle_bins"));

    const int C = m.backbone_.out_channels();
    if (m.group_corr_ && C % m.groups_ != 0) throw ConfigError("channels must be divisible by groups");
    const int h_t = m.backbone_.feature_extent(cfg.integer("template_size"));
    const int corr_channels = m.group_corr_ ? pyramid::bank_size(h_t) * m.groups_ : C;

    std::mt19937_64 rng(static_cast<uint64_t>(cfg.integer("seed")));
    const std::string scheme = cfg.str("init");
    m.backbone_.init_params(m.params_, rng, scheme);
    if (m.group_corr_) pyramid::init_attention_params(m.params_, rng, C, scheme);
    voting::init_vote_params(m.params_, rng, corr_channels, m.widths_, R, m.refine_upsample_, scheme);
    return m;
}

int Model::correlate(Tape& tape, const ParamSet::Binding& b, int templ, int search, bool bank_is_cache) const {
    if (group_corr_) {
        int bank = templ;
        if (!bank_is_cache) {
            const int fta = pyramid::spatial_feature_selection(tape, b, templ);
            bank = pyramid::pyramid_feature_pooling(tape, fta);
        }
        return pyramid::group_pixel_correlation(tape, bank, search, groups_);
    }
    return pyramid::depthwise_correlation(tape, templ, search);
}

Model::Forward Model::head(Tape& tape, const ParamSet::Binding& b, int corr) const {
    const int fv = voting::vote_generation(tape, b, corr, widths_);
    const int fr = voting::vote_refinement(tape, b, fv, refine_upsample_);
    const auto maps = voting::vote_aggregation(tape, fr, field_);
    return {maps.top_left, maps.bottom_right};
}

Model::Forward Model::forward_pair(Tape& tape, const ParamSet::Binding& b, int templ_image, int search_image) const {
    const int ft = backbone_.forward_branch(tape, b, templ_image, true);
    const int fs = backbone_.forward_branch(tape, b, search_image, false);
    return head(tape, b, correlate(tape, b, ft, fs, false));
}

Tensor Model::compute_template_cache(const Tensor& templ_image) const {
    Tape tape;
    const auto b = params_.inject(tape);
    const int ft = backbone_.forward_branch(tape, b, tape.leaf(templ_image), true);
    if (!group_corr_) return tape.value(ft);
    const int fta = pyramid::spatial_feature_selection(tape, b, ft);
    const int bank = pyramid::pyramid_feature_pooling(tape, fta);
    return tape.value(bank);
}

Model::Forward Model::forward_with_cache(Tape& tape, const ParamSet::Binding& b, const Tensor& cache,
                                         int search_image) const {
    const int fs = backbone_.forward_branch(tape, b, search_image, false);
    return head(tape, b, correlate(tape, b, tape.leaf(cache), fs, group_corr_));
}

GeometryMap Model::presence_geometry() const {
    auto layers = backbone_.layer_geometries();
    if (!group_corr_) {
        const int h_t = template_feature_extent();
        layers.push_back(conv_geometry(h_t, 1));  // valid whole-template correlation
    }
    for (int i = 0; i < 3; ++i) layers.push_back(conv_geometry(3, 1));
    if (refine_upsample_) layers.push_back(upsample2x_geometry());
    return compose_geometry(layers);
}

int Model::presence_extent(int search_px) const {
    int n = backbone_.feature_extent(search_px);
    if (!group_corr_) n = n - template_feature_extent() + 1;
    n -= 6;  // three unpadded 3x3 convolutions
    if (n < 1) throw ShapeError("search too small for voting head");
    return refine_upsample_ ? 2 * n : n;
}

}  // namespace pcdhv
