#pragma once

#include "dsb/cache_policy.hpp"
#include "dsb/core_state.hpp"
#include "dsb/sim_oracle.hpp"
#include "dsb/toy_model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace dsb {

// What the decode loop needs from a model: confidences for the masked
// positions of a recompute plan.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual Vocab        vocab() const             = 0;
    virtual bool         supports_kv_cache() const = 0;
    virtual std::int32_t max_len() const           = 0;

    // Called once before the first step of every decode.
    virtual void reset(const SequenceState & state) = 0;

    // Confidences for every masked position in plan.positions, keyed by
    // absolute position.
    virtual ConfidenceMap score(const SequenceState & state, const RecomputePlan & plan) = 0;
};

// Toy transformer behind the denoiser contract. Full plans run forward_full
// and replace the cache; partial plans run forward_cached against it.
class ToyDenoiser final : public Denoiser {
public:
    explicit ToyDenoiser(std::shared_ptr<const ToyModel> model);

    Vocab        vocab() const override { return model_->vocab(); }
    bool         supports_kv_cache() const override { return true; }
    std::int32_t max_len() const override { return model_->config().max_len; }

    void          reset(const SequenceState & state) override;
    ConfidenceMap score(const SequenceState & state, const RecomputePlan & plan) override;

    const ToyModel &          model() const { return *model_; }
    const std::optional<KvCache> & kv() const { return kv_; }
    std::int64_t              queries() const { return queries_; }

private:
    std::shared_ptr<const ToyModel> model_;
    std::optional<KvCache>          kv_;
    std::int64_t                    queries_ = 0;
};

// Synthetic difficulty oracle; has no KV state.
class OracleDenoiser final : public Denoiser {
public:
    explicit OracleDenoiser(DifficultyProfile profile);

    Vocab        vocab() const override { return profile_.vocab; }
    bool         supports_kv_cache() const override { return false; }
    std::int32_t max_len() const override;

    void          reset(const SequenceState & state) override;
    ConfidenceMap score(const SequenceState & state, const RecomputePlan & plan) override;

    const DifficultyProfile & profile() const { return profile_; }

private:
    DifficultyProfile profile_;
};

// Denoiser option strings:
//   toy:seed=42[,vocab=64,width=64,heads=4,layers=4,maxlen=512]
//   toy:weights=path.bin
//   oracle:profile=path.prof
//   oracle:scripted=boundary[,at=31,hard=0.95,easy=0.05,gamma=0.5,radius=4]
//   oracle:scripted=uniform[,difficulty=0.05,gamma=0.5,radius=4]
// Scripted oracle profiles take their length from gen_len and their seed from
// `run_seed`.
std::unique_ptr<Denoiser> make_denoiser(std::string_view spec, std::int32_t gen_len, std::uint64_t run_seed);

} // namespace dsb
