#pragma once

#include "pcdhv/backbone.hpp"
#include "pcdhv/config.hpp"
#include "pcdhv/pyramid.hpp"
#include "pcdhv/voting.hpp"

namespace pcdhv {

// Full pipeline: Siamese backbone -> pyramid correlation -> deep hough voting.
class Model {
  public:
    static Model build(const Config& cfg);

    struct Forward {
        int top_left;      // presence map node, H x W x 1
        int bottom_right;  // presence map node, H x W x 1
    };

    // Training path: both branches on-tape.
    Forward forward_pair(Tape& tape, const ParamSet::Binding& b, int templ_image, int search_image) const;

    // Inference path: template side evaluated once, cached as a plain tensor
    // (kernel bank for group correlation, template feature for depthwise).
    Tensor compute_template_cache(const Tensor& templ_image) const;
    Forward forward_with_cache(Tape& tape, const ParamSet::Binding& b, const Tensor& cache, int search_image) const;

    GeometryMap presence_geometry() const;  // presence-map cell -> crop pixel
    int presence_extent(int search_px) const;
    int template_feature_extent() const { return backbone_.feature_extent(cfg_.integer("template_size")); }

    const Config& config() const { return cfg_; }
    const Backbone& backbone() const { return backbone_; }
    const voting::VoteField& vote_field() const { return field_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

  private:
    int correlate(Tape& tape, const ParamSet::Binding& b, int template_feature_or_bank, int search_feature,
                  bool bank_is_cache) const;
    Forward head(Tape& tape, const ParamSet::Binding& b, int corr) const;

    Config cfg_;
    Backbone backbone_;
    voting::VoteField field_;
    ParamSet params_;
    voting::VoteGenWidths widths_;
    int groups_ = 8;
    bool group_corr_ = true;
    bool refine_upsample_ = true;
};

}  // namespace pcdhv
