#include "form/factors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "form/rng.hpp"

namespace form {

namespace {

void check_arity(RelationId rel, size_t count) {
    const int k = arity(rel);
    if (k == kVariableArity ? count < kMinGroupSize : count != static_cast<size_t>(k)) {
        throw InvalidInput("wrong number of objects for " + std::string(relation_name(rel)));
    }
}

// Diffusion time fed to networks; a function of t / T only, so a network
// trained on one schedule length can be sampled on another.
float model_time(size_t t, const NoiseSchedule& schedule) {
    return static_cast<float>(1000.0 * static_cast<double>(t) / static_cast<double>(schedule.steps()));
}

// Per-relation pose dimension check for a flat batch.
void check_dims(const std::vector<ShapeDims>& shapes, size_t t, const NoiseSchedule& schedule) {
    if (shapes.empty()) throw InvalidInput("factor needs at least one object");
    if (t > schedule.steps()) throw std::out_of_range("noise level out of range");
}

struct Columns {
    Eigen::MatrixXf shapes, z0;
};

Columns to_columns(const std::vector<RelationSample>& data, size_t k) {
    Columns c{Eigen::MatrixXf(2 * k, data.size()), Eigen::MatrixXf(3 * k, data.size())};
    for (size_t j = 0; j < data.size(); ++j) {
        const auto& s = data[j];
        if (s.shapes.size() != k || s.poses.size() != k) throw InvalidInput("sample arity does not match the network");
        const PoseVector z = encode_poses(s.poses);
        for (size_t i = 0; i < k; ++i) {
            c.shapes(2 * i, j) = static_cast<float>(s.shapes[i][0]);
            c.shapes(2 * i + 1, j) = static_cast<float>(s.shapes[i][1]);
        }
        for (size_t i = 0; i < 3 * k; ++i) c.z0(i, j) = static_cast<float>(z[i]);
    }
    return c;
}

// Noised inputs for the columns `idx` with levels and noise drawn from `rng`.
struct NoisedBatch {
    Eigen::MatrixXf shapes, zt, eps;
    std::vector<float> tau;
};

NoisedBatch make_batch(const Columns& c, const std::vector<size_t>& idx, size_t begin, size_t end,
                       const NoiseSchedule& schedule, Rng& rng) {
    const Eigen::Index rows = c.z0.rows();
    const auto n = static_cast<Eigen::Index>(end - begin);
    NoisedBatch b{Eigen::MatrixXf(c.shapes.rows(), n), Eigen::MatrixXf(rows, n), Eigen::MatrixXf(rows, n), {}};
    std::uniform_int_distribution<size_t> level(1, schedule.steps());
    for (Eigen::Index j = 0; j < n; ++j) {
        const size_t col = idx[begin + static_cast<size_t>(j)];
        const size_t t = level(rng);
        const double ab = schedule.alpha_bar_at(t);
        const float sa = static_cast<float>(std::sqrt(ab)), sn = static_cast<float>(std::sqrt(1.0 - ab));
        b.shapes.col(j) = c.shapes.col(static_cast<Eigen::Index>(col));
        for (Eigen::Index i = 0; i < rows; ++i) {
            const float e = static_cast<float>(gaussian(rng));
            b.eps(i, j) = e;
            b.zt(i, j) = sa * c.z0(i, static_cast<Eigen::Index>(col)) + sn * e;
        }
        b.tau.push_back(model_time(t, schedule));
    }
    return b;
}

void optimizer_step(MlpDenoiser& net, const TrainConfig& cfg, double lr, size_t step) {
    const float flr = static_cast<float>(lr);
    if (cfg.optimizer == Optimizer::sgd) {
        const float mu = static_cast<float>(cfg.momentum);
        for (auto& [name, l] : net.layers()) {
            l->m1W = mu * l->m1W + l->gW;
            l->m1b = mu * l->m1b + l->gb;
            l->W -= flr * l->m1W;
            l->b -= flr * l->m1b;
        }
        return;
    }
    const float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
    const float c1 = 1.0f - std::pow(b1, static_cast<float>(step));
    const float c2 = 1.0f - std::pow(b2, static_cast<float>(step));
    auto update = [&](auto& w, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0f - b1) * g;
        v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
        w.array() -= flr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (auto& [name, l] : net.layers()) {
        update(l->W, l->m1W, l->m2W, l->gW);
        update(l->b, l->m1b, l->m2b, l->gb);
    }
}

}  // namespace

void encode_pose(const Pose& p, double* z) {
    z[0] = kPosScale * p.x - kPosShift;
    z[1] = kPosScale * p.y - kPosShift;
    z[2] = kThetaScale * p.theta;
}

Pose decode_pose(const double* z) {
    return Pose{(z[0] + kPosShift) / kPosScale, (z[1] + kPosShift) / kPosScale, z[2] / kThetaScale};
}

PoseVector encode_poses(const std::vector<Pose>& poses) {
    PoseVector z(3 * poses.size());
    for (size_t i = 0; i < poses.size(); ++i) encode_pose(poses[i], &z[3 * i]);
    return z;
}

std::vector<Pose> decode_poses(const PoseVector& z) {
    if (z.size() % 3 != 0) throw InvalidInput("pose vector length must be a multiple of 3");
    std::vector<Pose> out(z.size() / 3);
    for (size_t i = 0; i < out.size(); ++i) out[i] = decode_pose(&z[3 * i]);
    return out;
}

PoseVector analytic_eps(RelationId rel, const std::vector<ShapeDims>& shapes, const std::vector<Pose>& poses, size_t t,
                        const NoiseSchedule& schedule, const Thresholds& th, const EnergyOptions& opt) {
    const double s = std::sqrt(1.0 - schedule.alpha_bar_at(t));
    EnergyResult r = analytic_energy_grad(rel, shapes, poses, th, opt);
    for (double& g : r.grad) g *= s;
    return r.grad;
}

PoseVector FactorModel::eps(const PoseVector& z, const std::vector<ShapeDims>& shapes, size_t t,
                            const NoiseSchedule& schedule) const {
    if (z.size() != 3 * shapes.size()) throw InvalidInput("pose vector length does not match the shapes");
    PoseVector out(z.size());
    eps_batch(z.data(), 1, shapes, t, schedule, out.data());
    return out;
}

EnergyOptions AnalyticOptions::energy_options() const {
    return EnergyOptions{margin_frac * thresholds.align_tol, margin_frac * thresholds.angle_tol};
}

double AnalyticOptions::kappa(size_t t, const NoiseSchedule& schedule) const {
    return stiffness / (1.0 - schedule.alpha_bar_at(t) + floor);
}

AnalyticFactor::AnalyticFactor(RelationId rel, AnalyticOptions opt) : rel_(rel), opt_(std::move(opt)) {
    opt_.thresholds.validate();
    if (opt_.margin_frac < 0.0 || opt_.stiffness <= 0.0 || opt_.floor <= 0.0) {
        throw InvalidInput("invalid analytic factor options");
    }
}

void AnalyticFactor::eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                               const NoiseSchedule& schedule, double* out) const {
    check_dims(shapes, t, schedule);
    check_arity(rel_, shapes.size());
    const size_t dim = 3 * shapes.size();
    const double ab = schedule.alpha_bar_at(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    const double kappa = opt_.kappa(t, schedule);
    const EnergyOptions eopt = opt_.energy_options();
    std::vector<double> scaled(dim);
    for (size_t b = 0; b < batch; ++b) {
        const double* zb = z + b * dim;
        double* ob = out + b * dim;
        for (size_t i = 0; i < dim; ++i) scaled[i] = sa * zb[i];
        std::vector<Pose> poses(shapes.size());
        for (size_t i = 0; i < shapes.size(); ++i) poses[i] = decode_pose(&scaled[3 * i]);
        const PoseVector g = analytic_eps(rel_, shapes, poses, t, schedule, opt_.thresholds, eopt);
        for (size_t i = 0; i < dim; ++i) {
            const double jac = i % 3 == 2 ? 1.0 / kThetaScale : 1.0 / kPosScale;
            ob[i] = sn * zb[i] + kappa * sa * jac * g[i];
        }
    }
}

LearnedFactor::LearnedFactor(RelationId rel, std::shared_ptr<const MlpDenoiser> net) : rel_(rel), net_(std::move(net)) {
    if (!net_) throw InvalidInput("learned factor needs a network");
    if (is_variable_arity(rel_)) throw InvalidInput("variable-arity relations use the pair-chain factor");
    if (net_->objects() != static_cast<size_t>(arity(rel_))) {
        throw InvalidInput("network arity does not match " + std::string(relation_name(rel_)));
    }
}

void LearnedFactor::eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                              const NoiseSchedule& schedule, double* out) const {
    check_dims(shapes, t, schedule);
    check_arity(rel_, shapes.size());
    const size_t k = shapes.size();
    const auto n = static_cast<Eigen::Index>(batch);
    Eigen::MatrixXf g(2 * k, n), zm(3 * k, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (size_t i = 0; i < k; ++i) {
            g(2 * i, j) = static_cast<float>(shapes[i][0]);
            g(2 * i + 1, j) = static_cast<float>(shapes[i][1]);
        }
        for (size_t i = 0; i < 3 * k; ++i) zm(i, j) = static_cast<float>(z[static_cast<size_t>(j) * 3 * k + i]);
    }
    const Eigen::MatrixXf e = net_->forward(g, zm, std::vector<float>(batch, model_time(t, schedule)));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (size_t i = 0; i < 3 * k; ++i) out[static_cast<size_t>(j) * 3 * k + i] = e(i, j);
    }
}

PairChainFactor::PairChainFactor(RelationId rel, std::shared_ptr<const MlpDenoiser> pair_net)
    : rel_(rel), net_(std::move(pair_net)) {
    if (!net_) throw InvalidInput("pair-chain factor needs a network");
    if (!is_variable_arity(rel_)) throw InvalidInput("pair-chain factors serve variable-arity relations");
    if (net_->objects() != 2) throw InvalidInput("pair-chain factor needs a two-object network");
}

std::vector<size_t> PairChainFactor::chain_order(RelationId rel, const std::vector<ShapeDims>& shapes) {
    std::vector<size_t> order(shapes.size());
    std::iota(order.begin(), order.end(), 0);
    if (rel == RelationId::sorted) {
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return shapes[a][1] > shapes[b][1]; });
    }
    return order;
}

std::vector<std::pair<size_t, size_t>> PairChainFactor::chain_pairs(RelationId rel,
                                                                     const std::vector<ShapeDims>& shapes) {
    const auto order = chain_order(rel, shapes);
    std::vector<std::pair<size_t, size_t>> out;
    for (size_t i = 0; i + 1 < order.size(); ++i) out.emplace_back(order[i], order[i + 1]);
    return out;
}

std::vector<RelationSample> PairChainFactor::pair_dataset(const std::vector<RelationSample>& data) {
    std::vector<RelationSample> out;
    for (const auto& s : data) {
        for (const auto& [a, b] : chain_pairs(s.relation, s.shapes)) {
            out.push_back(RelationSample{s.relation, {s.shapes[a], s.shapes[b]}, {s.poses[a], s.poses[b]}});
        }
    }
    return out;
}

void PairChainFactor::eps_batch(const double* z, size_t batch, const std::vector<ShapeDims>& shapes, size_t t,
                                const NoiseSchedule& schedule, double* out) const {
    check_dims(shapes, t, schedule);
    check_arity(rel_, shapes.size());
    const size_t k = shapes.size(), dim = 3 * k;
    const auto chain = chain_pairs(rel_, shapes);
    const size_t pairs = chain.size();
    const auto n = static_cast<Eigen::Index>(batch * pairs);
    Eigen::MatrixXf g(4, n), zm(6, n);
    for (size_t b = 0; b < batch; ++b) {
        for (size_t p = 0; p < pairs; ++p) {
            const auto col = static_cast<Eigen::Index>(b * pairs + p);
            for (size_t m = 0; m < 2; ++m) {
                const size_t obj = m == 0 ? chain[p].first : chain[p].second;
                g(2 * m, col) = static_cast<float>(shapes[obj][0]);
                g(2 * m + 1, col) = static_cast<float>(shapes[obj][1]);
                for (size_t c = 0; c < 3; ++c) zm(3 * m + c, col) = static_cast<float>(z[b * dim + 3 * obj + c]);
            }
        }
    }
    const Eigen::MatrixXf e = net_->forward(g, zm, std::vector<float>(batch * pairs, model_time(t, schedule)));
    std::fill(out, out + batch * dim, 0.0);
    for (size_t b = 0; b < batch; ++b) {
        for (size_t p = 0; p < pairs; ++p) {
            const auto col = static_cast<Eigen::Index>(b * pairs + p);
            for (size_t m = 0; m < 2; ++m) {
                const size_t obj = m == 0 ? chain[p].first : chain[p].second;
                for (size_t c = 0; c < 3; ++c) out[b * dim + 3 * obj + c] += e(3 * static_cast<Eigen::Index>(m) + static_cast<Eigen::Index>(c), col);
            }
        }
    }
}

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || noise_draws == 0 || !(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0 ||
        schedule_steps < 2 || ema_decay < 0.0 || ema_decay >= 1.0 || !(final_lr_fraction > 0.0) || final_lr_fraction > 1.0) {
        throw InvalidInput("invalid training configuration");
    }
}

double evaluate_loss(const MlpDenoiser& net, const std::vector<RelationSample>& data, size_t schedule_steps,
                     uint64_t seed) {
    if (data.empty()) throw InvalidInput("empty dataset");
    const auto schedule = NoiseSchedule::cosine(schedule_steps);
    const Columns c = to_columns(data, net.objects());
    // Small datasets are revisited with fresh noise so the estimate rests on
    // at least kMinEvalDraws noise draws.
    constexpr size_t kMinEvalDraws = 4096;
    const size_t repeats = (kMinEvalDraws + data.size() - 1) / data.size();
    std::vector<size_t> idx;
    for (size_t r = 0; r < repeats; ++r) {
        for (size_t i = 0; i < data.size(); ++i) idx.push_back(i);
    }
    Rng rng = stream_rng(seed, 0x10552);
    double total = 0.0;
    const size_t chunk = 256;
    for (size_t begin = 0; begin < idx.size(); begin += chunk) {
        const size_t end = std::min(idx.size(), begin + chunk);
        const NoisedBatch b = make_batch(c, idx, begin, end, schedule, rng);
        total += static_cast<double>((net.forward(b.shapes, b.zt, b.tau) - b.eps).squaredNorm());
    }
    return total / static_cast<double>(c.z0.rows() * static_cast<Eigen::Index>(idx.size()));
}

TrainResult train(RelationId rel, const std::vector<RelationSample>& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw InvalidInput("empty dataset");
    for (const auto& s : data) {
        if (s.relation != rel) throw InvalidInput("dataset relation does not match " + std::string(relation_name(rel)));
        check_arity(rel, s.shapes.size());
        if (s.poses.size() != s.shapes.size()) throw InvalidInput("sample has mismatched shapes and poses");
    }
    const std::vector<RelationSample> train_data = is_variable_arity(rel) ? PairChainFactor::pair_dataset(data) : data;
    MlpShape shape = cfg.shape;
    shape.objects = is_variable_arity(rel) ? 2 : static_cast<size_t>(arity(rel));

    TrainResult result;
    auto trained = std::make_shared<MlpDenoiser>(shape, cfg.seed);
    MlpDenoiser& net = *trained;
    // Exponential moving average of the weights; the returned network.
    result.network = std::make_shared<MlpDenoiser>(net);
    const auto schedule = NoiseSchedule::cosine(cfg.schedule_steps);
    const Columns c = to_columns(train_data, shape.objects);
    const uint64_t eval_seed = splitmix64(cfg.seed ^ 0xe7a1);
    result.initial_loss = evaluate_loss(net, train_data, cfg.schedule_steps, eval_seed);

    Rng rng = stream_rng(cfg.seed, 0x7a11);
    // Each epoch visits every sample noise_draws times with independent noise.
    std::vector<size_t> idx;
    for (size_t r = 0; r < cfg.noise_draws; ++r) {
        for (size_t i = 0; i < train_data.size(); ++i) idx.push_back(i);
    }
    size_t step = 0;
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double progress = cfg.epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1) : 0.0;
        const double f = cfg.final_lr_fraction;
        const double lr = cfg.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(kPi * progress)));
        std::shuffle(idx.begin(), idx.end(), rng);
        double sum = 0.0;
        size_t batches = 0;
        for (size_t begin = 0; begin < idx.size(); begin += cfg.batch_size) {
            const size_t end = std::min(idx.size(), begin + cfg.batch_size);
            const NoisedBatch b = make_batch(c, idx, begin, end, schedule, rng);
            net.zero_grad();
            sum += net.loss_and_grad(b.shapes, b.zt, b.tau, b.eps);
            ++batches;
            optimizer_step(net, cfg, lr, ++step);
            const float d = static_cast<float>(cfg.ema_decay);
            auto live = net.layers();
            auto avg = result.network->layers();
            for (size_t i = 0; i < live.size(); ++i) {
                avg[i].second->W = d * avg[i].second->W + (1.0f - d) * live[i].second->W;
                avg[i].second->b = d * avg[i].second->b + (1.0f - d) * live[i].second->b;
            }
        }
        const double loss = sum / static_cast<double>(batches);
        result.epoch_losses.push_back(loss);
        if (cfg.on_epoch) cfg.on_epoch(epoch, loss);
    }
    result.final_loss = evaluate_loss(*result.network, train_data, cfg.schedule_steps, eval_seed);
    return result;
}

std::shared_ptr<FactorModel> make_learned_factor(RelationId rel, std::shared_ptr<const MlpDenoiser> net) {
    if (is_variable_arity(rel)) return std::make_shared<PairChainFactor>(rel, std::move(net));
    return std::make_shared<LearnedFactor>(rel, std::move(net));
}

ModelMap analytic_models(const AnalyticOptions& opt) {
    ModelMap out;
    for (auto rel : all_relations()) out[rel] = std::make_shared<AnalyticFactor>(rel, opt);
    return out;
}

}  // namespace form
