#include "form/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "form/rng.hpp"

namespace form {

void SamplerConfig::validate() const {
    if (samples == 0) throw InvalidInput("samples must be at least 1");
    if (mcmc_steps == 0) throw InvalidInput("mcmc_steps must be at least 1");
    if (!(ula_noise_scale >= 0.0) || !std::isfinite(ula_noise_scale)) throw InvalidInput("invalid ula_noise_scale");
    if (!(scene_gap >= 0.0) || !(scene_stiffness > 0.0) || !(scene_ramp >= 0.0)) throw InvalidInput("invalid scene term settings");
}

CompositeScore::CompositeScore(const GroundGraph& graph, const Scene& scene, const ModelMap& models,
                               const SamplerConfig& cfg)
    : shapes_(normalized_shapes(scene.objects, scene.table)),
      degree_(scene.objects.size(), 0.0),
      average_(cfg.average_factors),
      scene_(cfg.scene_terms),
      scene_stiffness_(cfg.scene_stiffness),
      scene_ramp_(cfg.scene_ramp) {
    scene.table.validate();
    terms_.gap = cfg.scene_gap;
    for (const auto& atom : graph.atoms()) {
        validate_atom(atom, scene);
        const auto it = models.find(atom.relation);
        if (it == models.end() || !it->second) {
            throw InvalidInput("no factor model for " + std::string(relation_name(atom.relation)));
        }
        BoundFactor f;
        f.model = it->second.get();
        for (const auto& name : atom.args) {
            const size_t i = scene.index_of(name);
            f.args.push_back(i);
            f.shapes.push_back(shapes_[i]);
            degree_[i] += 1.0;
        }
        if (atom.relation == RelationId::on_top_of || atom.relation == RelationId::centered) {
            terms_.exempt.emplace_back(std::min(f.args[0], f.args[1]), std::max(f.args[0], f.args[1]));
        }
        factors_.push_back(std::move(f));
    }
}

void CompositeScore::eps_batch(const double* z, size_t batch, size_t t, const NoiseSchedule& schedule,
                               double* out) const {
    const size_t n = shapes_.size(), dim = 3 * n;
    std::fill(out, out + batch * dim, 0.0);
    std::vector<double> sub, sub_out;
    for (const auto& f : factors_) {
        const size_t fd = 3 * f.args.size();
        sub.resize(batch * fd);
        sub_out.resize(batch * fd);
        for (size_t b = 0; b < batch; ++b) {
            for (size_t a = 0; a < f.args.size(); ++a) {
                for (size_t c = 0; c < 3; ++c) sub[b * fd + 3 * a + c] = z[b * dim + 3 * f.args[a] + c];
            }
        }
        f.model->eps_batch(sub.data(), batch, f.shapes, t, schedule, sub_out.data());
        for (size_t b = 0; b < batch; ++b) {
            for (size_t a = 0; a < f.args.size(); ++a) {
                for (size_t c = 0; c < 3; ++c) out[b * dim + 3 * f.args[a] + c] += sub_out[b * fd + 3 * a + c];
            }
        }
    }
    const double ab = schedule.alpha_bar_at(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    for (size_t b = 0; b < batch; ++b) {
        for (size_t i = 0; i < n; ++i) {
            for (size_t c = 0; c < 3; ++c) {
                double& o = out[b * dim + 3 * i + c];
                if (degree_[i] == 0.0) {
                    o = sn * z[b * dim + 3 * i + c];  // score of the N(0, I) prior
                } else if (average_) {
                    o /= degree_[i];
                }
            }
        }
    }
    if (!scene_ || n == 0) return;
    const double kappa = scene_stiffness_ * std::pow(ab, scene_ramp_) / (1.0 - ab + 1e-4);
    std::vector<double> scaled(dim);
    for (size_t b = 0; b < batch; ++b) {
        for (size_t i = 0; i < dim; ++i) scaled[i] = sa * z[b * dim + i];
        const EnergyResult r = scene_energy_grad(shapes_, decode_poses(scaled), terms_);
        if (r.value == 0.0) continue;
        for (size_t i = 0; i < dim; ++i) {
            const double jac = i % 3 == 2 ? 1.0 / kThetaScale : 1.0 / kPosScale;
            out[b * dim + i] += kappa * sa * jac * sn * r.grad[i];
        }
    }
}

PoseVector CompositeScore::eps(const PoseVector& z, size_t t, const NoiseSchedule& schedule) const {
    if (z.size() != 3 * shapes_.size()) throw InvalidInput("pose vector length does not match the scene");
    PoseVector out(z.size());
    eps_batch(z.data(), 1, t, schedule, out.data());
    return out;
}

std::vector<Pose> finalize_poses(const PoseVector& z, bool clamp_to_unit) {
    std::vector<Pose> poses = decode_poses(z);
    for (auto& p : poses) {
        p.theta = wrap_angle(p.theta);
        if (clamp_to_unit) {
            p.x = std::clamp(p.x, 0.0, 1.0);
            p.y = std::clamp(p.y, 0.0, 1.0);
        }
    }
    return poses;
}

namespace {

// Runs the chains of samples [begin, end) in lockstep so learned factors
// evaluate one batch per step.
void run_chains(const CompositeScore& score, const NoiseSchedule& schedule, const SamplerConfig& cfg, size_t begin,
                size_t end, std::vector<std::vector<Pose>>& result) {
    const size_t batch = end - begin, dim = 3 * score.objects();
    std::vector<Rng> rngs;
    for (size_t k = begin; k < end; ++k) rngs.push_back(stream_rng(cfg.seed, k));
    std::vector<PoseVector> z(batch, PoseVector(dim));
    for (size_t b = 0; b < batch; ++b) {
        for (double& v : z[b]) v = gaussian(rngs[b]);
    }
    std::vector<double> flat(batch * dim), eps(batch * dim);
    PoseVector e(dim), noise(dim);
    for (size_t t = schedule.steps(); t >= 1; --t) {
        for (size_t m = 0; m < cfg.mcmc_steps; ++m) {
            for (size_t b = 0; b < batch; ++b) std::copy(z[b].begin(), z[b].end(), flat.begin() + b * dim);
            score.eps_batch(flat.data(), batch, t, schedule, eps.data());
            const bool last = m + 1 == cfg.mcmc_steps;
            for (size_t b = 0; b < batch; ++b) {
                std::copy(eps.begin() + b * dim, eps.begin() + (b + 1) * dim, e.begin());
                for (double& v : noise) v = gaussian(rngs[b]);
                z[b] = last ? reverse_step(z[b], t, e, schedule, noise, cfg.variance)
                            : ula_step(z[b], t, e, schedule, cfg.ula_noise_scale, noise, cfg.variance);
            }
        }
    }
    for (size_t b = 0; b < batch; ++b) result[begin + b] = finalize_poses(z[b], cfg.clamp_to_unit);
}

}  // namespace

SampleResult sample(const GroundGraph& graph, const Scene& scene, const ModelMap& models,
                    const NoiseSchedule& schedule, const SamplerConfig& cfg) {
    cfg.validate();
    scene.validate();
    SampleResult out;
    if (graph.empty()) out.warnings.push_back("empty graph: poses are drawn from the unconstrained prior");
    const CompositeScore score(graph, scene, models, cfg);
    out.poses.resize(cfg.samples);
    if (scene.objects.empty()) return out;

    unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<size_t>(threads, cfg.samples));
    if (threads <= 1) {
        run_chains(score, schedule, cfg, 0, cfg.samples, out.poses);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const size_t chunk = (cfg.samples + threads - 1) / threads;
    for (size_t begin = 0, w = 0; begin < cfg.samples; begin += chunk, ++w) {
        const size_t end = std::min(cfg.samples, begin + chunk);
        pool.emplace_back([&, begin, end, w] {
            try {
                run_chains(score, schedule, cfg, begin, end, out.poses);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace form
