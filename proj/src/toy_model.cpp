#include "dsb/toy_model.hpp"

#include "dsb/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>

namespace dsb {

namespace {

constexpr std::array<char, 4> kMagic   = { 'D', 'S', 'B', 'W' };
constexpr std::uint16_t       kVersion = 1;
constexpr std::size_t         kHeaderBytes = 16;
constexpr float               kNormEps = 1e-5f;

std::size_t idx(std::int64_t a) { return static_cast<std::size_t>(a); }

// out[rows x n] = in[rows x k] * w[k x n], row-major.
void matmul(std::span<const float> in, std::span<const float> w, std::span<float> out, std::int64_t rows,
            std::int64_t k, std::int64_t n) {
    std::fill(out.begin(), out.end(), 0.0f);
    for (std::int64_t r = 0; r < rows; ++r) {
        const float * a = in.data() + r * k;
        float *       o = out.data() + r * n;
        for (std::int64_t i = 0; i < k; ++i) {
            const float   ai = a[i];
            const float * wi = w.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) {
                o[j] += ai * wi[j];
            }
        }
    }
}

void rms_norm(std::span<const float> in, std::span<float> out, std::int64_t rows, std::int64_t width) {
    for (std::int64_t r = 0; r < rows; ++r) {
        const float * x  = in.data() + r * width;
        float *       y  = out.data() + r * width;
        float         ss = 0.0f;
        for (std::int64_t i = 0; i < width; ++i) {
            ss += x[i] * x[i];
        }
        const float scale = 1.0f / std::sqrt(ss / static_cast<float>(width) + kNormEps);
        for (std::int64_t i = 0; i < width; ++i) {
            y[i] = x[i] * scale;
        }
    }
}

float gelu(float x) {
    constexpr float c = 0.7978845608028654f;  // sqrt(2/pi)
    return 0.5f * x * (1.0f + std::tanh(c * (x + 0.044715f * x * x * x)));
}

void fill_uniform(std::vector<float> & v, std::mt19937_64 & rng) {
    // Built from raw 64-bit draws so every platform sees the same floats.
    for (float & x : v) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        x              = static_cast<float>(-0.1 + 0.2 * u);
    }
}

template <class T> void put_le(std::ostream & os, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        os.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

template <class T> T get_le(const unsigned char * p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

void check_tokens(const ToyModel & model, std::span<const TokenId> tokens) {
    const auto & cfg = model.config();
    if (tokens.empty()) {
        throw InvalidArgument("forward pass needs at least one token");
    }
    if (static_cast<std::int64_t>(tokens.size()) > cfg.max_len) {
        throw InvalidArgument("sequence of length " + std::to_string(tokens.size()) + " exceeds max length " +
                              std::to_string(cfg.max_len));
    }
    for (TokenId t : tokens) {
        if (t < 0 || t >= model.total_vocab()) {
            throw InvalidArgument("token " + std::to_string(t) + " outside model vocab");
        }
    }
}

// Shared by the full and cached paths so both use identical arithmetic.
LogitTable run_layers(const ToyModel & model, std::span<const TokenId> tokens, KvCache & kv,
                      const PositionSet & rows) {
    const auto &       cfg    = model.config();
    const std::int64_t width  = cfg.width;
    const std::int64_t ff     = 4 * width;
    const std::int64_t heads  = cfg.heads;
    const std::int64_t hd     = width / heads;
    const std::int64_t n      = static_cast<std::int64_t>(tokens.size());
    const std::int64_t nrows  = static_cast<std::int64_t>(rows.size());
    const std::int64_t vocab  = model.total_vocab();
    const float        scale  = 1.0f / std::sqrt(static_cast<float>(hd));

    ++kv.generation;

    std::vector<float> x(idx(nrows * width));
    for (std::int64_t r = 0; r < nrows; ++r) {
        const Position p   = rows[idx(r)];
        const float *  te  = model.token_embedding().data() + tokens[idx(p)] * width;
        const float *  pe  = model.position_embedding().data() + p * width;
        float *        out = x.data() + r * width;
        for (std::int64_t i = 0; i < width; ++i) {
            out[i] = te[i] + pe[i];
        }
    }

    std::vector<float> h(x.size()), q(x.size()), k(x.size()), v(x.size()), attn(x.size()), proj(x.size());
    std::vector<float> up(idx(nrows * ff));
    std::vector<float> scores(idx(n));

    for (std::size_t l = 0; l < model.layer_weights().size(); ++l) {
        const LayerWeights & w     = model.layer_weights()[l];
        LayerKV &            cache = kv.layers[l];

        rms_norm(x, h, nrows, width);
        matmul(h, w.wq, q, nrows, width, width);
        matmul(h, w.wk, k, nrows, width, width);
        matmul(h, w.wv, v, nrows, width, width);

        for (std::int64_t r = 0; r < nrows; ++r) {
            const std::size_t p = idx(rows[idx(r)]);
            std::copy_n(k.data() + r * width, width, cache.keys.data() + p * idx(width));
            std::copy_n(v.data() + r * width, width, cache.values.data() + p * idx(width));
            cache.valid[p] = 1;
            cache.stamp[p] = kv.generation;
        }
        for (std::int64_t j = 0; j < n; ++j) {
            if (!cache.valid[idx(j)]) {
                throw CacheIntegrityError("layer " + std::to_string(l) + " position " + std::to_string(j) +
                                          " read from cache before it was computed");
            }
        }

        for (std::int64_t r = 0; r < nrows; ++r) {
            for (std::int64_t hh = 0; hh < heads; ++hh) {
                const float * qh   = q.data() + r * width + hh * hd;
                float         maxs = -std::numeric_limits<float>::infinity();
                for (std::int64_t j = 0; j < n; ++j) {
                    const float * kj = cache.keys.data() + j * width + hh * hd;
                    float         s  = 0.0f;
                    for (std::int64_t i = 0; i < hd; ++i) {
                        s += qh[i] * kj[i];
                    }
                    s          = s * scale;
                    scores[idx(j)] = s;
                    maxs       = std::max(maxs, s);
                }
                float denom = 0.0f;
                for (std::int64_t j = 0; j < n; ++j) {
                    scores[idx(j)] = std::exp(scores[idx(j)] - maxs);
                    denom += scores[idx(j)];
                }
                float * oh = attn.data() + r * width + hh * hd;
                std::fill_n(oh, hd, 0.0f);
                for (std::int64_t j = 0; j < n; ++j) {
                    const float   a  = scores[idx(j)] / denom;
                    const float * vj = cache.values.data() + j * width + hh * hd;
                    for (std::int64_t i = 0; i < hd; ++i) {
                        oh[i] += a * vj[i];
                    }
                }
            }
        }
        matmul(attn, w.wo, proj, nrows, width, width);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
        }

        rms_norm(x, h, nrows, width);
        matmul(h, w.w_up, up, nrows, width, ff);
        for (float & u : up) {
            u = gelu(u);
        }
        matmul(up, w.w_down, proj, nrows, ff, width);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
        }
    }

    rms_norm(x, h, nrows, width);
    LogitTable out;
    out.positions = rows;
    out.vocab     = static_cast<std::int32_t>(vocab);
    out.values.resize(idx(nrows * vocab));
    out.queries = nrows;
    matmul(h, model.unembedding(), out.values, nrows, width, vocab);
    return out;
}

} // namespace

void DenoiserConfig::validate() const {
    if (vocab_size < 1 || width < 1 || heads < 1 || layers < 1 || max_len < 1) {
        throw InvalidArgument("denoiser dimensions must be positive");
    }
    if (width % heads != 0) {
        throw InvalidArgument("width " + std::to_string(width) + " not divisible by head count " +
                              std::to_string(heads));
    }
}

template <class Fn> void ToyModel::for_each_tensor(Fn && fn) {
    fn(tok_emb_);
    fn(pos_emb_);
    for (auto & l : layers_) {
        fn(l.wq);
        fn(l.wk);
        fn(l.wv);
        fn(l.wo);
        fn(l.w_up);
        fn(l.w_down);
    }
    fn(unembed_);
}

template <class Fn> void ToyModel::for_each_tensor(Fn && fn) const {
    const_cast<ToyModel *>(this)->for_each_tensor([&](const std::vector<float> & t) { fn(t); });
}

void ToyModel::allocate() {
    const std::size_t d  = idx(config_.width);
    const std::size_t tv = idx(total_vocab());
    tok_emb_.assign(tv * d, 0.0f);
    pos_emb_.assign(idx(config_.max_len) * d, 0.0f);
    layers_.assign(idx(config_.layers), LayerWeights{});
    for (auto & l : layers_) {
        l.wq.assign(d * d, 0.0f);
        l.wk.assign(d * d, 0.0f);
        l.wv.assign(d * d, 0.0f);
        l.wo.assign(d * d, 0.0f);
        l.w_up.assign(d * 4 * d, 0.0f);
        l.w_down.assign(4 * d * d, 0.0f);
    }
    unembed_.assign(d * tv, 0.0f);
}

ToyModel::ToyModel(const DenoiserConfig & config) : config_(config) {
    config_.validate();
    allocate();
    std::mt19937_64 rng(config_.seed);
    for_each_tensor([&](std::vector<float> & t) { fill_uniform(t, rng); });
}

std::uint64_t ToyModel::checksum() const {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for_each_tensor([&](const std::vector<float> & t) {
        for (float f : t) {
            const auto bits = std::bit_cast<std::uint32_t>(f);
            for (int i = 0; i < 4; ++i) {
                hash ^= (bits >> (8 * i)) & 0xffu;
                hash *= 0x100000001b3ull;
            }
        }
    });
    return hash;
}

void ToyModel::save(const std::filesystem::path & path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw InvalidArgument("cannot open " + path.string() + " for writing");
    }
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(os, kVersion);
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(config_.heads));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(config_.vocab_size));
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(config_.width));
    put_le<std::uint16_t>(os, static_cast<std::uint16_t>(config_.layers));
    for_each_tensor([&](const std::vector<float> & t) {
        for (float f : t) {
            put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(f));
        }
    });
    if (!os) {
        throw InvalidArgument("failed writing " + path.string());
    }
}

ToyModel ToyModel::load(const std::filesystem::path & path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw InvalidArgument("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw InvalidArgument(path.string() + " is not a weight file");
    }
    if (get_le<std::uint16_t>(bytes.data() + 4) != kVersion) {
        throw InvalidArgument("unsupported weight file version");
    }
    ToyModel model;
    model.config_.heads      = get_le<std::uint16_t>(bytes.data() + 6);
    model.config_.vocab_size = static_cast<std::int32_t>(get_le<std::uint32_t>(bytes.data() + 8));
    model.config_.width      = get_le<std::uint16_t>(bytes.data() + 12);
    model.config_.layers     = get_le<std::uint16_t>(bytes.data() + 14);
    model.config_.seed       = 0;

    const std::size_t d         = idx(model.config_.width);
    const std::size_t tv        = idx(model.config_.vocab_size + 1);
    const std::size_t fixed     = tv * d * 2 + idx(model.config_.layers) * (4 * d * d + 8 * d * d);
    const std::size_t n_floats  = (bytes.size() - kHeaderBytes) / 4;
    if ((bytes.size() - kHeaderBytes) % 4 != 0 || d == 0 || n_floats <= fixed || (n_floats - fixed) % d != 0) {
        throw InvalidArgument(path.string() + " has an inconsistent size");
    }
    model.config_.max_len = static_cast<std::int32_t>((n_floats - fixed) / d);
    model.config_.validate();
    model.allocate();

    const unsigned char * p = bytes.data() + kHeaderBytes;
    model.for_each_tensor([&](std::vector<float> & t) {
        for (float & f : t) {
            f = std::bit_cast<float>(get_le<std::uint32_t>(p));
            p += 4;
        }
    });
    return model;
}

KvCache KvCache::empty(const ToyModel & model, std::int32_t seq_len) {
    KvCache kv;
    kv.seq_len = seq_len;
    kv.width   = model.config().width;
    kv.layers.resize(idx(model.config().layers));
    for (auto & l : kv.layers) {
        l.keys.assign(idx(seq_len) * idx(kv.width), 0.0f);
        l.values.assign(idx(seq_len) * idx(kv.width), 0.0f);
        l.valid.assign(idx(seq_len), 0);
        l.stamp.assign(idx(seq_len), 0);
    }
    return kv;
}

bool KvCache::all_valid() const {
    return std::all_of(layers.begin(), layers.end(), [](const LayerKV & l) {
        return std::all_of(l.valid.begin(), l.valid.end(), [](std::uint8_t v) { return v != 0; });
    });
}

std::span<const float> LogitTable::row_at(std::size_t index) const {
    return std::span<const float>(values).subspan(index * idx(vocab), idx(vocab));
}

std::span<const float> LogitTable::row(Position pos) const {
    const auto it = std::lower_bound(positions.begin(), positions.end(), pos);
    if (it == positions.end() || *it != pos) {
        throw InvalidArgument("no logits for position " + std::to_string(pos));
    }
    return row_at(static_cast<std::size_t>(it - positions.begin()));
}

FullForward forward_full(const ToyModel & model, std::span<const TokenId> tokens) {
    check_tokens(model, tokens);
    const auto  n = static_cast<std::int32_t>(tokens.size());
    FullForward out{ {}, KvCache::empty(model, n) };
    PositionSet all(idx(n));
    for (Position p = 0; p < n; ++p) {
        all[idx(p)] = p;
    }
    out.logits = run_layers(model, tokens, out.kv, all);
    return out;
}

LogitTable forward_cached(const ToyModel & model, std::span<const TokenId> tokens, KvCache & kv,
                          const PositionSet & recompute) {
    check_tokens(model, tokens);
    if (recompute.empty()) {
        throw InvalidArgument("cached forward needs at least one recompute position");
    }
    const auto n = static_cast<Position>(tokens.size());
    if (kv.seq_len != n || kv.width != model.config().width ||
        kv.layers.size() != idx(model.config().layers)) {
        throw CacheIntegrityError("cache shape does not match the sequence");
    }
    for (std::size_t i = 0; i < recompute.size(); ++i) {
        if (recompute[i] < 0 || recompute[i] >= n || (i > 0 && recompute[i] <= recompute[i - 1])) {
            throw InvalidArgument("recompute set must be sorted, unique and inside the sequence");
        }
    }
    return run_layers(model, tokens, kv, recompute);
}

std::vector<float> softmax(std::span<const float> logits) {
    std::vector<float> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    const float maxv  = *std::max_element(logits.begin(), logits.end());
    float       denom = 0.0f;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - maxv);
        denom += out[i];
    }
    for (float & v : out) {
        v /= denom;
    }
    return out;
}

ConfidenceMap confidences(const LogitTable & logits, const PositionSet & masked, const Vocab & vocab) {
    ConfidenceMap out;
    if (logits.vocab != vocab.size) {
        throw InvalidArgument("logit width does not match the vocab");
    }
    for (Position p : masked) {
        const auto row  = logits.row(p);
        float      maxv = -std::numeric_limits<float>::infinity();
        TokenId    best = -1;
        for (TokenId t = 0; t < vocab.size; ++t) {
            if (t != vocab.mask_id && row[idx(t)] > maxv) {
                maxv = row[idx(t)];
                best = t;
            }
        }
        float denom = 0.0f;
        for (TokenId t = 0; t < vocab.size; ++t) {
            if (t != vocab.mask_id) {
                denom += std::exp(row[idx(t)] - maxv);
            }
        }
        out.emplace(p, ConfidenceEntry{ best, 1.0f / denom });
    }
    return out;
}

} // namespace dsb
