#pragma once

#include "dsb/core_state.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dsb {

struct DenoiserConfig {
    std::int32_t  vocab_size = 64;   // regular tokens; the mask id is appended as vocab_size
    std::int32_t  width      = 64;
    std::int32_t  heads      = 4;
    std::int32_t  layers     = 4;
    std::int32_t  max_len    = 512;
    std::uint64_t seed       = 42;

    void  validate() const;
    Vocab vocab() const { return Vocab{ vocab_size + 1, vocab_size }; }
};

struct LayerWeights {
    std::vector<float> wq, wk, wv, wo;  // width x width
    std::vector<float> w_up;            // width x 4*width
    std::vector<float> w_down;          // 4*width x width
};

// Small bidirectional pre-norm transformer with learned absolute positions.
// Weights are immutable after construction and may be shared across threads.
class ToyModel {
public:
    // Every weight is drawn uniformly from [-0.1, 0.1] using the seed.
    explicit ToyModel(const DenoiserConfig & config);

    const DenoiserConfig &            config() const { return config_; }
    Vocab                             vocab() const { return config_.vocab(); }
    std::int32_t                      total_vocab() const { return config_.vocab_size + 1; }
    const std::vector<float> &        token_embedding() const { return tok_emb_; }
    const std::vector<float> &        position_embedding() const { return pos_emb_; }
    const std::vector<LayerWeights> & layer_weights() const { return layers_; }
    const std::vector<float> &        unembedding() const { return unembed_; }

    // FNV-1a over the raw bits of every weight, in serialization order.
    std::uint64_t checksum() const;

    // Little-endian float32 dump behind a 16-byte header:
    //   char[4] "DSBW", u16 version, u16 heads, u32 vocab_size, u16 width, u16 layers
    // followed by token embedding, position embedding, per-layer
    // (wq, wk, wv, wo, w_up, w_down) and the unembedding. max_len is
    // recovered from the file size.
    void            save(const std::filesystem::path & path) const;
    static ToyModel load(const std::filesystem::path & path);

private:
    ToyModel() = default;
    template <class Fn> void for_each_tensor(Fn && fn);
    template <class Fn> void for_each_tensor(Fn && fn) const;
    void                     allocate();

    DenoiserConfig            config_;
    std::vector<float>        tok_emb_;  // total_vocab x width
    std::vector<float>        pos_emb_;  // max_len x width
    std::vector<LayerWeights> layers_;
    std::vector<float>        unembed_;  // width x total_vocab
};

// Per-layer key/value rows for every sequence position. Rows whose valid
// flag is clear were never computed and must not be read.
struct LayerKV {
    std::vector<float>         keys;    // seq_len x width
    std::vector<float>         values;  // seq_len x width
    std::vector<std::uint8_t>  valid;
    std::vector<std::uint64_t> stamp;  // cache generation that wrote the row
};

struct KvCache {
    std::int32_t         seq_len = 0;
    std::int32_t         width   = 0;
    std::uint64_t        generation = 0;  // bumped by every forward pass
    std::vector<LayerKV> layers;

    // All rows invalid.
    static KvCache empty(const ToyModel & model, std::int32_t seq_len);

    bool all_valid() const;
};

// Logit rows for a sorted set of positions.
struct LogitTable {
    PositionSet        positions;
    std::int32_t       vocab = 0;
    std::vector<float> values;  // positions.size() x vocab
    std::int64_t       queries = 0;  // attention query rows evaluated

    std::span<const float> row_at(std::size_t index) const;
    // Throws InvalidArgument if the position has no row.
    std::span<const float> row(Position pos) const;
};

struct FullForward {
    LogitTable logits;
    KvCache    kv;
};

// Full bidirectional pass over every position; the returned cache is fully valid.
FullForward forward_full(const ToyModel & model, std::span<const TokenId> tokens);

// Queries only the `recompute` positions. Their K/V rows are recomputed,
// written into `kv` and stamped; every other row is read from the cache as is.
// Throws CacheIntegrityError when a row outside `recompute` is invalid.
LogitTable forward_cached(const ToyModel & model, std::span<const TokenId> tokens, KvCache & kv,
                          const PositionSet & recompute);

// Numerically stable softmax.
std::vector<float> softmax(std::span<const float> logits);

// Per masked position: argmax token and its probability, with the mask column
// removed from the distribution before normalizing.
ConfidenceMap confidences(const LogitTable & logits, const PositionSet & masked, const Vocab & vocab);

} // namespace dsb
