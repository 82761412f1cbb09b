#include "fpl/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fpl/nn_kernels.hpp"
#include "fpl/rng.hpp"

namespace fpl {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;  // running = (1-m)*running + m*batch

struct Tens {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    void resize(int n_, int c_, int h_, int w_) {
        n = n_; c = c_; h = h_; w = w_;
        v.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
    }
    long plane() const { return static_cast<long>(h) * w; }
    long chan_stride() const { return plane(); }
    double* chan(int in, int ic) {
        return v.data() + (static_cast<long>(in) * c + ic) * plane();
    }
    const double* chan(int in, int ic) const {
        return v.data() + (static_cast<long>(in) * c + ic) * plane();
    }
};

struct BlockCache {
    Tens conv_out;               // pre-ReLU
    Tens bn_in;                  // post-ReLU
    Tens bn_out;                 // post-BN (pre-dropout)
    std::vector<double> mean, inv_std;  // statistics used to normalize
    std::vector<double> batch_var;      // train mode only
    std::vector<double> drop_mult;      // per-element 0 or 1/(1-rate); empty if off
    Tens pooled;
    std::vector<int> argmax;
};

struct Flow {
    Tens input;
    std::vector<BlockCache> blocks;
    std::vector<double> flat;    // [n, flat_dim] view of last pooled
    std::vector<double> logits;  // [n, classes]
    std::vector<double> probs;
};

}  // namespace

void CnnConfig::validate() const {
    if (input_side < 1) throw std::invalid_argument("input_side must be >= 1");
    if (block_filters.empty()) throw std::invalid_argument("need at least one block");
    if (block_filters.size() != block_dropout.size()) {
        throw std::invalid_argument("block_filters and block_dropout lengths differ");
    }
    for (int f : block_filters) {
        if (f < 1) throw std::invalid_argument("filter counts must be >= 1");
    }
    for (double d : block_dropout) {
        if (d < 0 || d >= 1) throw std::invalid_argument("dropout must be in [0,1)");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw std::invalid_argument("kernel_size must be odd and >= 1");
    }
    if (pool < 1) throw std::invalid_argument("pool must be >= 1");
    if (classes != 2) throw std::invalid_argument("classifier is two-class");
    if (side_after_block(static_cast<int>(block_filters.size()) - 1) < 1) {
        throw std::invalid_argument("input_side too small for the pooling chain");
    }
}

int CnnConfig::side_after_block(int block) const {
    int s = input_side;
    for (int b = 0; b <= block; ++b) s /= pool;
    return s;
}

int CnnConfig::flat_dim() const {
    const int last = static_cast<int>(block_filters.size()) - 1;
    const int s = side_after_block(last);
    return block_filters.back() * s * s;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate >= 0)) throw std::invalid_argument("bad learning rate");
}

ModelWeights init_model(const CnnConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    ModelWeights m;
    m.config = config;

    int in_ch = 1;
    const int k = config.kernel_size;
    for (std::size_t b = 0; b < config.block_filters.size(); ++b) {
        const int f = config.block_filters[b];
        BlockWeights bw;
        const int fan_in = in_ch * k * k;
        const double bound = std::sqrt(6.0 / fan_in);
        bw.w.resize(static_cast<std::size_t>(f) * in_ch * k * k);
        for (auto& v : bw.w) v = rng.uniform(-bound, bound);
        bw.b.assign(f, 0.0);
        bw.gamma.assign(f, 1.0);
        bw.beta.assign(f, 0.0);
        bw.run_mean.assign(f, 0.0);
        bw.run_var.assign(f, 1.0);
        m.blocks.push_back(std::move(bw));
        in_ch = f;
    }
    const int flat = config.flat_dim();
    const double bound = std::sqrt(6.0 / flat);
    m.dense_w.resize(static_cast<std::size_t>(config.classes) * flat);
    for (auto& v : m.dense_w) v = rng.uniform(-bound, bound);
    m.dense_b.assign(config.classes, 0.0);
    return m;
}

namespace {

ModelWeights zeros_like(const ModelWeights& m) {
    ModelWeights z;
    z.config = m.config;
    z.blocks.resize(m.blocks.size());
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        z.blocks[b].w.assign(m.blocks[b].w.size(), 0.0);
        z.blocks[b].b.assign(m.blocks[b].b.size(), 0.0);
        z.blocks[b].gamma.assign(m.blocks[b].gamma.size(), 0.0);
        z.blocks[b].beta.assign(m.blocks[b].beta.size(), 0.0);
        z.blocks[b].run_mean.assign(m.blocks[b].run_mean.size(), 0.0);
        z.blocks[b].run_var.assign(m.blocks[b].run_var.size(), 0.0);
    }
    z.dense_w.assign(m.dense_w.size(), 0.0);
    z.dense_b.assign(m.dense_b.size(), 0.0);
    return z;
}

// Trainable parameters only; running statistics are buffers, not params.
template <typename M, typename F>
void for_each_param_tensor(M& model, F&& fn) {
    for (auto& blk : model.blocks) {
        fn(blk.w);
        fn(blk.b);
        fn(blk.gamma);
        fn(blk.beta);
    }
    fn(model.dense_w);
    fn(model.dense_b);
}

void fill_input(const ModelWeights& model, std::span<const GrayImage> batch,
                Tens& input) {
    const int side = model.config.input_side;
    for (const GrayImage& img : batch) {
        if (img.width != side || img.height != side) {
            throw std::invalid_argument("shape mismatch: patch does not match input_side");
        }
    }
    input.resize(static_cast<int>(batch.size()), 1, side, side);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double* dst = input.chan(static_cast<int>(i), 0);
        const auto& src = batch[i].data;
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / 255.0;
    }
}

void batchnorm_stats(const Tens& x, std::vector<double>& mean,
                     std::vector<double>& var, bool parallel) {
    mean.assign(x.c, 0.0);
    var.assign(x.c, 0.0);
    const double m_count = static_cast<double>(x.n) * x.plane();

#pragma omp parallel for schedule(static) if (parallel)
    for (int ic = 0; ic < x.c; ++ic) {
        double sum = 0;
        for (int in = 0; in < x.n; ++in) {
            const double* p = x.chan(in, ic);
            for (long i = 0; i < x.plane(); ++i) sum += p[i];
        }
        const double mu = sum / m_count;
        double sq = 0;
        for (int in = 0; in < x.n; ++in) {
            const double* p = x.chan(in, ic);
            for (long i = 0; i < x.plane(); ++i) {
                const double d = p[i] - mu;
                sq += d * d;
            }
        }
        mean[ic] = mu;
        var[ic] = sq / m_count;
    }
}

// One block forward: conv -> ReLU -> batch norm -> dropout -> max pool.
void block_forward(const ModelWeights& model, int b, const Tens& x,
                   RunMode mode, Rng* dropout_rng, bool parallel,
                   BlockCache& cache) {
    const CnnConfig& cfg = model.config;
    const BlockWeights& blk = model.blocks[b];
    const int f = cfg.block_filters[b];
    const int k = cfg.kernel_size;

    cache.conv_out.resize(x.n, f, x.h, x.w);
    nn::conv2d_forward(x.v.data(), x.n, x.c, x.h, x.w, blk.w.data(),
                       blk.b.data(), f, k, cache.conv_out.v.data(), parallel);

    cache.bn_in = cache.conv_out;
    for (auto& v : cache.bn_in.v) v = v > 0 ? v : 0.0;

    if (mode == RunMode::Train) {
        batchnorm_stats(cache.bn_in, cache.mean, cache.batch_var, parallel);
        cache.inv_std.resize(f);
        for (int ic = 0; ic < f; ++ic) {
            cache.inv_std[ic] = 1.0 / std::sqrt(cache.batch_var[ic] + kBnEps);
        }
    } else {
        cache.mean = blk.run_mean;
        cache.inv_std.resize(f);
        for (int ic = 0; ic < f; ++ic) {
            cache.inv_std[ic] = 1.0 / std::sqrt(blk.run_var[ic] + kBnEps);
        }
    }

    cache.bn_out.resize(x.n, f, x.h, x.w);
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
    for (int in = 0; in < x.n; ++in) {
        for (int ic = 0; ic < f; ++ic) {
            const double* src = cache.bn_in.chan(in, ic);
            double* dst = cache.bn_out.chan(in, ic);
            const double mu = cache.mean[ic];
            const double is = cache.inv_std[ic];
            const double g = blk.gamma[ic];
            const double beta = blk.beta[ic];
            for (long i = 0; i < cache.bn_in.plane(); ++i) {
                dst[i] = g * ((src[i] - mu) * is) + beta;
            }
        }
    }

    const double rate = cfg.block_dropout[b];
    if (mode == RunMode::Train && rate > 0) {
        if (!dropout_rng) {
            throw std::invalid_argument("train-mode forward needs a dropout seed");
        }
        const double keep_scale = 1.0 / (1.0 - rate);
        cache.drop_mult.resize(cache.bn_out.v.size());
        // serial mask draw keeps the rng stream order fixed
        for (auto& mlt : cache.drop_mult) {
            mlt = dropout_rng->uniform() < rate ? 0.0 : keep_scale;
        }
        for (std::size_t i = 0; i < cache.bn_out.v.size(); ++i) {
            cache.bn_out.v[i] *= cache.drop_mult[i];
        }
    } else {
        cache.drop_mult.clear();
    }

    const int oh = x.h / cfg.pool, ow = x.w / cfg.pool;
    cache.pooled.resize(x.n, f, oh, ow);
    cache.argmax.assign(cache.pooled.v.size(), 0);
    nn::maxpool_forward(cache.bn_out.v.data(), x.n, f, x.h, x.w, cfg.pool,
                        cache.pooled.v.data(), cache.argmax.data(), parallel);
}

void forward_full(const ModelWeights& model, std::span<const GrayImage> batch,
                  RunMode mode, Rng* dropout_rng, bool parallel, Flow& flow) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    model.config.validate();
    fill_input(model, batch, flow.input);

    const int nb = static_cast<int>(model.blocks.size());
    flow.blocks.resize(nb);
    const Tens* x = &flow.input;
    for (int b = 0; b < nb; ++b) {
        block_forward(model, b, *x, mode, dropout_rng, parallel, flow.blocks[b]);
        x = &flow.blocks[b].pooled;
    }

    const int n = flow.input.n;
    const int flat = model.config.flat_dim();
    if (static_cast<long>(x->v.size()) != static_cast<long>(n) * flat) {
        throw std::logic_error("flatten dimension mismatch");
    }
    flow.flat = x->v;

    const int classes = model.config.classes;
    flow.logits.assign(static_cast<std::size_t>(n) * classes, 0.0);
    flow.probs.assign(flow.logits.size(), 0.0);
#pragma omp parallel for schedule(static) if (parallel)
    for (int in = 0; in < n; ++in) {
        const double* fx = flow.flat.data() + static_cast<long>(in) * flat;
        double* z = flow.logits.data() + static_cast<long>(in) * classes;
        for (int cl = 0; cl < classes; ++cl) {
            double acc = model.dense_b[cl];
            const double* wr = model.dense_w.data() + static_cast<long>(cl) * flat;
            for (int j = 0; j < flat; ++j) acc += wr[j] * fx[j];
            z[cl] = acc;
        }
        const double zmax = *std::max_element(z, z + classes);
        double denom = 0;
        double* p = flow.probs.data() + static_cast<long>(in) * classes;
        for (int cl = 0; cl < classes; ++cl) {
            p[cl] = std::exp(z[cl] - zmax);
            denom += p[cl];
        }
        for (int cl = 0; cl < classes; ++cl) p[cl] /= denom;
    }
}

// Mean cross-entropy gradient path; fills `grads` (same layout as model).
void backward_full(const ModelWeights& model, const Flow& flow,
                   const std::vector<int>& labels, RunMode mode, bool parallel,
                   ModelWeights& grads) {
    const int n = flow.input.n;
    const int classes = model.config.classes;
    const int flat = model.config.flat_dim();

    std::vector<double> dlogits(flow.probs);
    for (int in = 0; in < n; ++in) {
        dlogits[static_cast<long>(in) * classes + labels[in]] -= 1.0;
    }
    for (auto& v : dlogits) v /= n;

    // dense layer
#pragma omp parallel for schedule(static) if (parallel)
    for (int cl = 0; cl < classes; ++cl) {
        double* gw = grads.dense_w.data() + static_cast<long>(cl) * flat;
        double gb = 0;
        for (int in = 0; in < n; ++in) {
            const double d = dlogits[static_cast<long>(in) * classes + cl];
            const double* fx = flow.flat.data() + static_cast<long>(in) * flat;
            for (int j = 0; j < flat; ++j) gw[j] += d * fx[j];
            gb += d;
        }
        grads.dense_b[cl] = gb;
    }

    std::vector<double> dflat(static_cast<std::size_t>(n) * flat, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
    for (int in = 0; in < n; ++in) {
        double* df = dflat.data() + static_cast<long>(in) * flat;
        const double* dl = dlogits.data() + static_cast<long>(in) * classes;
        for (int cl = 0; cl < classes; ++cl) {
            const double* wr = model.dense_w.data() + static_cast<long>(cl) * flat;
            for (int j = 0; j < flat; ++j) df[j] += dl[cl] * wr[j];
        }
    }

    // walk blocks in reverse
    Tens dout;  // gradient w.r.t. the block's pooled output
    const BlockCache& last = flow.blocks.back();
    dout.resize(last.pooled.n, last.pooled.c, last.pooled.h, last.pooled.w);
    dout.v = dflat;

    for (int b = static_cast<int>(model.blocks.size()) - 1; b >= 0; --b) {
        const BlockCache& cache = flow.blocks[b];
        const BlockWeights& blk = model.blocks[b];
        BlockWeights& gblk = grads.blocks[b];
        const CnnConfig& cfg = model.config;
        const int f = cfg.block_filters[b];
        const Tens& x_in = b == 0 ? flow.input : flow.blocks[b - 1].pooled;

        Tens dbn_out;
        dbn_out.resize(cache.bn_out.n, cache.bn_out.c, cache.bn_out.h, cache.bn_out.w);
        nn::maxpool_backward(dout.v.data(), cache.argmax.data(), dbn_out.n,
                             dbn_out.c, dbn_out.h, dbn_out.w, cfg.pool,
                             dbn_out.v.data(), parallel);

        if (!cache.drop_mult.empty()) {
            for (std::size_t i = 0; i < dbn_out.v.size(); ++i) {
                dbn_out.v[i] *= cache.drop_mult[i];
            }
        }

        // batch-norm backward -> gradient w.r.t. bn_in (post-ReLU)
        Tens dbn_in;
        dbn_in.resize(dbn_out.n, dbn_out.c, dbn_out.h, dbn_out.w);
        const double m_count = static_cast<double>(dbn_out.n) * dbn_out.plane();
#pragma omp parallel for schedule(static) if (parallel)
        for (int ic = 0; ic < f; ++ic) {
            const double mu = cache.mean[ic];
            const double is = cache.inv_std[ic];
            const double g = blk.gamma[ic];
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int in = 0; in < dbn_out.n; ++in) {
                const double* dy = dbn_out.chan(in, ic);
                const double* xv = cache.bn_in.chan(in, ic);
                for (long i = 0; i < dbn_out.plane(); ++i) {
                    sum_dy += dy[i];
                    sum_dy_xhat += dy[i] * (xv[i] - mu) * is;
                }
            }
            gblk.beta[ic] += sum_dy;
            gblk.gamma[ic] += sum_dy_xhat;

            if (mode == RunMode::Train) {
                for (int in = 0; in < dbn_out.n; ++in) {
                    const double* dy = dbn_out.chan(in, ic);
                    const double* xv = cache.bn_in.chan(in, ic);
                    double* dx = dbn_in.chan(in, ic);
                    for (long i = 0; i < dbn_out.plane(); ++i) {
                        const double xhat = (xv[i] - mu) * is;
                        dx[i] = g * is / m_count *
                                (m_count * dy[i] - sum_dy - xhat * sum_dy_xhat);
                    }
                }
            } else {
                for (int in = 0; in < dbn_out.n; ++in) {
                    const double* dy = dbn_out.chan(in, ic);
                    double* dx = dbn_in.chan(in, ic);
                    for (long i = 0; i < dbn_out.plane(); ++i) {
                        dx[i] = dy[i] * g * is;
                    }
                }
            }
        }

        // ReLU mask from pre-activation
        for (std::size_t i = 0; i < dbn_in.v.size(); ++i) {
            if (cache.conv_out.v[i] <= 0.0) dbn_in.v[i] = 0.0;
        }

        Tens dx_in;
        const bool need_dx = b > 0;
        if (need_dx) dx_in.resize(x_in.n, x_in.c, x_in.h, x_in.w);
        nn::conv2d_backward(x_in.v.data(), blk.w.data(), dbn_in.v.data(),
                            x_in.n, x_in.c, x_in.h, x_in.w, f, cfg.kernel_size,
                            need_dx ? dx_in.v.data() : nullptr, gblk.w.data(),
                            gblk.b.data(), parallel);
        if (need_dx) dout = std::move(dx_in);
    }
}

std::vector<PatchScore> scores_from_probs(const Flow& flow) {
    std::vector<PatchScore> out(flow.input.n);
    for (int i = 0; i < flow.input.n; ++i) {
        out[i].live = flow.probs[static_cast<long>(i) * 2 + kClassLive];
        out[i].spoof = flow.probs[static_cast<long>(i) * 2 + kClassSpoof];
    }
    return out;
}

}  // namespace

std::vector<PatchScore> forward(const ModelWeights& model,
                                std::span<const GrayImage> batch, RunMode mode,
                                std::uint64_t dropout_seed, bool parallel) {
    Flow flow;
    if (mode == RunMode::Train) {
        Rng rng(dropout_seed);
        forward_full(model, batch, mode, &rng, parallel, flow);
    } else {
        forward_full(model, batch, mode, nullptr, parallel, flow);
    }
    return scores_from_probs(flow);
}

std::vector<PatchScore> classify_patches(const ModelWeights& model,
                                         std::span<const GrayImage> patches,
                                         bool parallel) {
    std::vector<PatchScore> out;
    out.reserve(patches.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t i = 0; i < patches.size(); i += kChunk) {
        const std::size_t n = std::min(kChunk, patches.size() - i);
        auto scores = forward(model, patches.subspan(i, n), RunMode::Infer, 0,
                              parallel);
        out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
}

TrainHistory train(ModelWeights& model, const std::vector<Sample>& train_set,
                   const TrainConfig& config) {
    config.validate();
    model.config.validate();
    if (train_set.empty()) throw std::invalid_argument("empty training set");

    std::vector<int> class_counts(model.config.classes, 0);
    for (const Sample& s : train_set) {
        if (s.label < 0 || s.label >= model.config.classes) {
            throw std::invalid_argument("label out of range");
        }
        ++class_counts[s.label];
    }
    for (int cl = 0; cl < model.config.classes; ++cl) {
        if (class_counts[cl] == 0) {
            throw std::invalid_argument("empty class: need at least one sample of each");
        }
    }

    Rng rng(config.seed);
    ModelWeights adam_m = zeros_like(model);
    ModelWeights adam_v = zeros_like(model);
    long step = 0;

    const int n_total = static_cast<int>(train_set.size());
    std::vector<int> order(n_total);
    for (int i = 0; i < n_total; ++i) order[i] = i;

    TrainHistory history;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        long correct = 0;

        for (int start = 0; start < n_total; start += config.batch_size) {
            const int bsz = std::min(config.batch_size, n_total - start);
            std::vector<GrayImage> batch(bsz);
            std::vector<int> labels(bsz);
            for (int i = 0; i < bsz; ++i) {
                batch[i] = train_set[order[start + i]].image;
                labels[i] = train_set[order[start + i]].label;
            }

            Flow flow;
            forward_full(model, batch, RunMode::Train, &rng, config.parallel, flow);

            double batch_loss = 0;
            for (int i = 0; i < bsz; ++i) {
                const double* z = flow.logits.data() + static_cast<long>(i) * 2;
                const double zmax = std::max(z[0], z[1]);
                const double lse = zmax + std::log(std::exp(z[0] - zmax) +
                                                   std::exp(z[1] - zmax));
                batch_loss += lse - z[labels[i]];
                const int pred = flow.probs[static_cast<long>(i) * 2 + 0] >
                                         flow.probs[static_cast<long>(i) * 2 + 1]
                                     ? 0
                                     : 1;
                if (pred == labels[i]) ++correct;
            }
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("training diverged: non-finite loss");
            }
            loss_sum += batch_loss * bsz;

            ModelWeights grads = zeros_like(model);
            backward_full(model, flow, labels, RunMode::Train, config.parallel,
                          grads);

            // Adam
            ++step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            auto* pm = &adam_m;
            auto* pv = &adam_v;
            auto* pg = &grads;
            {
                // walk the three structures in lockstep
                std::vector<std::vector<double>*> mt, vt, gt, wt;
                for_each_param_tensor(*pm, [&](std::vector<double>& t) { mt.push_back(&t); });
                for_each_param_tensor(*pv, [&](std::vector<double>& t) { vt.push_back(&t); });
                for_each_param_tensor(*pg, [&](std::vector<double>& t) { gt.push_back(&t); });
                for_each_param_tensor(model, [&](std::vector<double>& t) { wt.push_back(&t); });
                for (std::size_t t = 0; t < wt.size(); ++t) {
                    auto& w = *wt[t];
                    auto& g = *gt[t];
                    auto& mm = *mt[t];
                    auto& vv = *vt[t];
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        mm[i] = config.beta1 * mm[i] + (1 - config.beta1) * g[i];
                        vv[i] = config.beta2 * vv[i] + (1 - config.beta2) * g[i] * g[i];
                        const double mhat = mm[i] / bc1;
                        const double vhat = vv[i] / bc2;
                        w[i] -= config.learning_rate * mhat /
                                (std::sqrt(vhat) + config.epsilon);
                    }
                }
            }

            // running statistics
            for (std::size_t b = 0; b < model.blocks.size(); ++b) {
                const BlockCache& cache = flow.blocks[b];
                BlockWeights& blk = model.blocks[b];
                for (std::size_t ic = 0; ic < blk.run_mean.size(); ++ic) {
                    blk.run_mean[ic] = (1 - kBnMomentum) * blk.run_mean[ic] +
                                       kBnMomentum * cache.mean[ic];
                    blk.run_var[ic] = (1 - kBnMomentum) * blk.run_var[ic] +
                                      kBnMomentum * cache.batch_var[ic];
                }
            }
        }

        history.epochs.push_back(
            {loss_sum / n_total, static_cast<double>(correct) / n_total});
    }
    return history;
}

double gradient_check(const ModelWeights& model, const Sample& sample) {
    model.config.validate();
    std::size_t param_count = 0;
    for_each_param_tensor(const_cast<ModelWeights&>(model),
                          [&](std::vector<double>& t) { param_count += t.size(); });
    if (param_count > 20000) {
        throw std::invalid_argument(
            "gradient_check needs a reduced configuration (too many parameters)");
    }

    const std::vector<GrayImage> batch{sample.image};
    const std::vector<int> labels{sample.label};

    // inference statistics, no dropout: the loss is smooth in every parameter
    auto loss_of = [&](const ModelWeights& m) {
        Flow flow;
        forward_full(m, batch, RunMode::Infer, nullptr, false, flow);
        const double* z = flow.logits.data();
        const double zmax = std::max(z[0], z[1]);
        return zmax + std::log(std::exp(z[0] - zmax) + std::exp(z[1] - zmax)) -
               z[labels[0]];
    };

    Flow flow;
    forward_full(model, batch, RunMode::Infer, nullptr, false, flow);
    ModelWeights analytic = zeros_like(model);
    backward_full(model, flow, labels, RunMode::Infer, false, analytic);

    ModelWeights probe = model;
    std::vector<std::vector<double>*> pt, at;
    for_each_param_tensor(probe, [&](std::vector<double>& t) { pt.push_back(&t); });
    for_each_param_tensor(analytic, [&](std::vector<double>& t) { at.push_back(&t); });

    const double h = 1e-3;
    double max_rel = 0;
    for (std::size_t t = 0; t < pt.size(); ++t) {
        for (std::size_t i = 0; i < pt[t]->size(); ++i) {
            double& p = (*pt[t])[i];
            const double saved = p;
            p = saved + h;
            const double lp = loss_of(probe);
            p = saved - h;
            const double lm = loss_of(probe);
            p = saved;
            const double numeric = (lp - lm) / (2 * h);
            const double a = (*at[t])[i];
            const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-8);
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

void put_f32_tensor(std::ofstream& out, const std::vector<double>& t,
                    const std::vector<std::uint32_t>& dims) {
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    std::size_t n = 1;
    for (auto d : dims) {
        put_u32(out, d);
        n *= d;
    }
    if (n != t.size()) throw std::logic_error("tensor shape mismatch on save");
    for (double v : t) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
}

std::uint32_t get_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw std::runtime_error("corrupt file: truncated model");
    return v;
}

std::vector<double> get_f32_tensor(std::ifstream& in,
                                   const std::vector<std::uint32_t>& expect) {
    const std::uint32_t rank = get_u32(in);
    if (rank != expect.size()) throw std::runtime_error("corrupt file: tensor rank");
    std::size_t n = 1;
    for (std::uint32_t d : expect) {
        if (get_u32(in) != d) throw std::runtime_error("corrupt file: tensor shape");
        n *= d;
    }
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        float f = 0;
        in.read(reinterpret_cast<char*>(&f), 4);
        if (!in) throw std::runtime_error("corrupt file: truncated model");
        t[i] = f;
    }
    return t;
}

constexpr char kMagic[4] = {'F', 'P', 'L', 'M'};

}  // namespace

void save_model(const ModelWeights& model, const std::filesystem::path& path) {
    model.config.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());

    out.write(kMagic, 4);
    put_u32(out, kModelFormatVersion);
    const CnnConfig& cfg = model.config;
    put_u32(out, static_cast<std::uint32_t>(cfg.input_side));
    put_u32(out, static_cast<std::uint32_t>(cfg.kernel_size));
    put_u32(out, static_cast<std::uint32_t>(cfg.pool));
    put_u32(out, static_cast<std::uint32_t>(cfg.classes));
    put_u32(out, static_cast<std::uint32_t>(cfg.block_filters.size()));
    for (int f : cfg.block_filters) put_u32(out, static_cast<std::uint32_t>(f));
    for (double d : cfg.block_dropout) {
        const float f = static_cast<float>(d);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }

    const std::uint32_t k = static_cast<std::uint32_t>(cfg.kernel_size);
    std::uint32_t in_ch = 1;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const std::uint32_t f = static_cast<std::uint32_t>(cfg.block_filters[b]);
        const BlockWeights& blk = model.blocks[b];
        put_f32_tensor(out, blk.w, {f, in_ch, k, k});
        put_f32_tensor(out, blk.b, {f});
        put_f32_tensor(out, blk.gamma, {f});
        put_f32_tensor(out, blk.beta, {f});
        put_f32_tensor(out, blk.run_mean, {f});
        put_f32_tensor(out, blk.run_var, {f});
        in_ch = f;
    }
    put_f32_tensor(out, model.dense_w,
                   {static_cast<std::uint32_t>(cfg.classes),
                    static_cast<std::uint32_t>(cfg.flat_dim())});
    put_f32_tensor(out, model.dense_b, {static_cast<std::uint32_t>(cfg.classes)});
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
}

ModelWeights load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("unreadable file: " + path.string());

    char magic[4] = {0};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("corrupt file: bad magic");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kModelFormatVersion) {
        throw std::runtime_error("version mismatch: model format " +
                                 std::to_string(version));
    }

    CnnConfig cfg;
    cfg.input_side = static_cast<int>(get_u32(in));
    cfg.kernel_size = static_cast<int>(get_u32(in));
    cfg.pool = static_cast<int>(get_u32(in));
    cfg.classes = static_cast<int>(get_u32(in));
    const std::uint32_t n_blocks = get_u32(in);
    if (n_blocks == 0 || n_blocks > 64) {
        throw std::runtime_error("corrupt file: block count");
    }
    cfg.block_filters.resize(n_blocks);
    cfg.block_dropout.resize(n_blocks);
    for (auto& f : cfg.block_filters) f = static_cast<int>(get_u32(in));
    for (auto& d : cfg.block_dropout) {
        float f = 0;
        in.read(reinterpret_cast<char*>(&f), 4);
        if (!in) throw std::runtime_error("corrupt file: truncated model");
        d = f;
    }
    cfg.validate();

    ModelWeights model;
    model.config = cfg;
    const std::uint32_t k = static_cast<std::uint32_t>(cfg.kernel_size);
    std::uint32_t in_ch = 1;
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        const std::uint32_t f = static_cast<std::uint32_t>(cfg.block_filters[b]);
        BlockWeights blk;
        blk.w = get_f32_tensor(in, {f, in_ch, k, k});
        blk.b = get_f32_tensor(in, {f});
        blk.gamma = get_f32_tensor(in, {f});
        blk.beta = get_f32_tensor(in, {f});
        blk.run_mean = get_f32_tensor(in, {f});
        blk.run_var = get_f32_tensor(in, {f});
        for (double v : blk.run_var) {
            if (v < 0) throw std::runtime_error("corrupt file: negative variance");
        }
        model.blocks.push_back(std::move(blk));
        in_ch = f;
    }
    model.dense_w = get_f32_tensor(in, {static_cast<std::uint32_t>(cfg.classes),
                                        static_cast<std::uint32_t>(cfg.flat_dim())});
    model.dense_b = get_f32_tensor(in, {static_cast<std::uint32_t>(cfg.classes)});
    return model;
}

std::uint64_t model_checksum(const ModelWeights& model) {
    std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
    auto mix = [&hash](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ull;
        }
    };
    mix(&model.config.input_side, sizeof(int));
    for (int f : model.config.block_filters) mix(&f, sizeof(int));
    auto mix_tensor = [&](const std::vector<double>& t) {
        mix(t.data(), t.size() * sizeof(double));
    };
    for (const auto& blk : model.blocks) {
        mix_tensor(blk.w);
        mix_tensor(blk.b);
        mix_tensor(blk.gamma);
        mix_tensor(blk.beta);
        mix_tensor(blk.run_mean);
        mix_tensor(blk.run_var);
    }
    mix_tensor(model.dense_w);
    mix_tensor(model.dense_b);
    return hash;
}

PatchScore baseline_classify(const Patch& patch, double threshold) {
    const double mean = mean_intensity(patch.pixels);
    const double live = 1.0 / (1.0 + std::exp(-(threshold - mean) / 16.0));
    return {live, 1.0 - live};
}

}  // namespace fpl
