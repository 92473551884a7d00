#include "form/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "form/geometry.hpp"
#include "form/rng.hpp"

namespace form {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'R', 'M', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

Eigen::MatrixXf silu(const Eigen::MatrixXf& x) {
    return x.unaryExpr([](float v) { return v * sigmoid(v); });
}

Eigen::MatrixXf silu_grad(const Eigen::MatrixXf& x) {
    return x.unaryExpr([](float v) {
        const float s = sigmoid(v);
        return s * (1.0f + v * (1.0f - s));
    });
}

float softplus(float v) { return v > 20.0f ? v : std::log1p(std::exp(v)); }

Eigen::MatrixXf mish(const Eigen::MatrixXf& x) {
    return x.unaryExpr([](float v) { return v * std::tanh(softplus(v)); });
}

Eigen::MatrixXf mish_grad(const Eigen::MatrixXf& x) {
    return x.unaryExpr([](float v) {
        const float t = std::tanh(softplus(v));
        return t + v * (1.0f - t * t) * sigmoid(v);
    });
}

Eigen::MatrixXf apply(const Linear& l, const Eigen::MatrixXf& x) { return (l.W * x).colwise() + l.b; }

// Accumulates parameter gradients and returns the input gradient.
Eigen::MatrixXf back(Linear& l, const Eigen::MatrixXf& x, const Eigen::MatrixXf& dy) {
    l.gW.noalias() += dy * x.transpose();
    l.gb += dy.rowwise().sum();
    return l.W.transpose() * dy;
}

void init_linear(Linear& l, Rng& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(l.W.cols()));
    std::uniform_real_distribution<float> d(-bound, bound);
    for (Eigen::Index i = 0; i < l.W.size(); ++i) l.W.data()[i] = d(rng);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b.data()[i] = d(rng);
}

template <typename T>
void put(std::string& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    buf.append(raw, sizeof(T));
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > buf.size()) throw InvalidInput("checkpoint truncated");
        char raw[sizeof(T)];
        std::memcpy(raw, buf.data() + pos, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }

    std::string bytes(size_t n) {
        if (pos + n > buf.size()) throw InvalidInput("checkpoint truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

nlohmann::json shape_to_json(const MlpShape& s) {
    return {{"objects", s.objects},       {"hidden", s.hidden},           {"encoder_hidden", s.encoder_hidden},
            {"time_dim", s.time_dim},     {"time_hidden", s.time_hidden}, {"backbone_layers", s.backbone_layers}};
}

MlpShape shape_from_metadata(const std::string& meta) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(meta);
        const auto& a = j.at("architecture");
        MlpShape s;
        s.objects = a.at("objects").get<size_t>();
        s.hidden = a.at("hidden").get<size_t>();
        s.encoder_hidden = a.at("encoder_hidden").get<size_t>();
        s.time_dim = a.at("time_dim").get<size_t>();
        s.time_hidden = a.at("time_hidden").get<size_t>();
        s.backbone_layers = a.at("backbone_layers").get<size_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("checkpoint metadata: ") + e.what());
    }
}

}  // namespace

Linear::Linear(size_t in, size_t out)
    : W(Eigen::MatrixXf::Zero(out, in)),
      b(Eigen::VectorXf::Zero(out)),
      gW(Eigen::MatrixXf::Zero(out, in)),
      m1W(Eigen::MatrixXf::Zero(out, in)),
      m2W(Eigen::MatrixXf::Zero(out, in)),
      gb(Eigen::VectorXf::Zero(out)),
      m1b(Eigen::VectorXf::Zero(out)),
      m2b(Eigen::VectorXf::Zero(out)) {}

struct MlpDenoiser::Cache {
    Eigen::MatrixXf s_in, s1, a_s1, s2;
    Eigen::MatrixXf z_in, p1, a_p1, p2;
    Eigen::MatrixXf e_in, t1, a_t1;
    std::vector<Eigen::MatrixXf> h_in, u;  // backbone inputs and pre-activations
    Eigen::MatrixXf h_out;
};

MlpDenoiser::MlpDenoiser(const MlpShape& shape, uint64_t seed) : shape_(shape) {
    if (shape.objects == 0 || shape.hidden == 0 || shape.encoder_hidden == 0 || shape.time_dim == 0 ||
        shape.time_dim % 2 != 0 || shape.time_hidden == 0 || shape.backbone_layers == 0) {
        throw InvalidInput("invalid MLP shape");
    }
    const size_t k = shape.objects, h = shape.hidden, e = shape.encoder_hidden;
    shape1_ = Linear(2 * k, e);
    shape2_ = Linear(e, h);
    pose1_ = Linear(3 * k, e);
    pose2_ = Linear(e, h);
    time1_ = Linear(shape.time_dim, shape.time_hidden);
    time2_ = Linear(shape.time_hidden, h);
    backbone_.emplace_back(3 * h, h);
    for (size_t i = 1; i < shape.backbone_layers; ++i) backbone_.emplace_back(h, h);
    decoder_ = Linear(h, 3 * k);

    Rng rng(splitmix64(seed));
    for (auto& [name, layer] : layers()) {
        if (layer != &decoder_) init_linear(*layer, rng);
    }
}

size_t MlpDenoiser::parameter_count() const {
    size_t n = 0;
    for (const auto& [name, l] : layers()) n += static_cast<size_t>(l->W.size() + l->b.size());
    return n;
}

std::vector<std::pair<std::string, Linear*>> MlpDenoiser::layers() {
    std::vector<std::pair<std::string, Linear*>> out{{"shape1", &shape1_}, {"shape2", &shape2_}, {"pose1", &pose1_},
                                                     {"pose2", &pose2_},   {"time1", &time1_},   {"time2", &time2_}};
    for (size_t i = 0; i < backbone_.size(); ++i) out.emplace_back("backbone" + std::to_string(i), &backbone_[i]);
    out.emplace_back("decoder", &decoder_);
    return out;
}

std::vector<std::pair<std::string, const Linear*>> MlpDenoiser::layers() const {
    std::vector<std::pair<std::string, const Linear*>> out;
    for (auto& [name, l] : const_cast<MlpDenoiser*>(this)->layers()) out.emplace_back(name, l);
    return out;
}

Eigen::MatrixXf MlpDenoiser::time_embedding(const std::vector<float>& tau, size_t dim) {
    const size_t half = dim / 2;
    Eigen::MatrixXf e(dim, tau.size());
    for (size_t j = 0; j < tau.size(); ++j) {
        for (size_t i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
            const double a = tau[j] * freq;
            e(i, j) = static_cast<float>(std::sin(a));
            e(i + half, j) = static_cast<float>(std::cos(a));
        }
    }
    return e;
}

Eigen::MatrixXf MlpDenoiser::run(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z,
                                 const std::vector<float>& tau, Cache* c) const {
    const size_t k = shape_.objects;
    if (static_cast<size_t>(shapes.rows()) != 2 * k || static_cast<size_t>(z.rows()) != 3 * k ||
        shapes.cols() != z.cols() || tau.size() != static_cast<size_t>(z.cols())) {
        throw InvalidInput("MLP input dimensions do not match the network arity");
    }
    const size_t h = shape_.hidden;
    const Eigen::MatrixXf s_in = shapes * kShapeFeatureScale;
    const Eigen::MatrixXf s1 = apply(shape1_, s_in);
    const Eigen::MatrixXf a_s1 = silu(s1);
    const Eigen::MatrixXf s2 = apply(shape2_, a_s1);
    const Eigen::MatrixXf p1 = apply(pose1_, z);
    const Eigen::MatrixXf a_p1 = silu(p1);
    const Eigen::MatrixXf p2 = apply(pose2_, a_p1);
    const Eigen::MatrixXf e_in = time_embedding(tau, shape_.time_dim);
    const Eigen::MatrixXf t1 = apply(time1_, e_in);
    const Eigen::MatrixXf a_t1 = mish(t1);
    const Eigen::MatrixXf t2 = apply(time2_, a_t1);

    Eigen::MatrixXf x(3 * h, z.cols());
    x.topRows(h) = silu(s2);
    x.middleRows(h, h) = silu(p2);
    x.bottomRows(h) = t2;
    if (c != nullptr) {
        c->s_in = s_in;
        c->s1 = s1;
        c->a_s1 = a_s1;
        c->s2 = s2;
        c->z_in = z;
        c->p1 = p1;
        c->a_p1 = a_p1;
        c->p2 = p2;
        c->e_in = e_in;
        c->t1 = t1;
        c->a_t1 = a_t1;
        c->h_in.clear();
        c->u.clear();
    }
    for (const auto& layer : backbone_) {
        Eigen::MatrixXf u = apply(layer, x);
        if (c != nullptr) {
            c->h_in.push_back(x);
            c->u.push_back(u);
        }
        x = silu(u);
    }
    if (c != nullptr) c->h_out = x;
    return apply(decoder_, x);
}

Eigen::MatrixXf MlpDenoiser::forward(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z,
                                     const std::vector<float>& tau) const {
    return run(shapes, z, tau, nullptr);
}

double MlpDenoiser::loss_and_grad(const Eigen::MatrixXf& shapes, const Eigen::MatrixXf& z,
                                  const std::vector<float>& tau, const Eigen::MatrixXf& target) {
    Cache c;
    const Eigen::MatrixXf out = run(shapes, z, tau, &c);
    if (target.rows() != out.rows() || target.cols() != out.cols()) {
        throw InvalidInput("target dimensions do not match the network output");
    }
    const Eigen::MatrixXf diff = out - target;
    const double n = static_cast<double>(diff.size());
    const double loss = static_cast<double>(diff.squaredNorm()) / n;

    const size_t h = shape_.hidden;
    Eigen::MatrixXf g = diff * static_cast<float>(2.0 / n);
    g = back(decoder_, c.h_out, g);
    for (size_t i = backbone_.size(); i-- > 0;) {
        g = g.cwiseProduct(silu_grad(c.u[i]));
        g = back(backbone_[i], c.h_in[i], g);
    }
    Eigen::MatrixXf gs = g.topRows(h).cwiseProduct(silu_grad(c.s2));
    gs = back(shape2_, c.a_s1, gs);
    gs = gs.cwiseProduct(silu_grad(c.s1));
    back(shape1_, c.s_in, gs);

    Eigen::MatrixXf gp = g.middleRows(h, h).cwiseProduct(silu_grad(c.p2));
    gp = back(pose2_, c.a_p1, gp);
    gp = gp.cwiseProduct(silu_grad(c.p1));
    back(pose1_, c.z_in, gp);

    Eigen::MatrixXf gt = back(time2_, c.a_t1, g.bottomRows(h));
    gt = gt.cwiseProduct(mish_grad(c.t1));
    back(time1_, c.e_in, gt);
    return loss;
}

void MlpDenoiser::zero_grad() {
    for (auto& [name, l] : layers()) {
        l->gW.setZero();
        l->gb.setZero();
    }
}

void MlpDenoiser::save(const std::string& path, const std::string& metadata_json) const {
    nlohmann::json meta = metadata_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(metadata_json);
    meta["architecture"] = shape_to_json(shape_);
    const std::string meta_text = meta.dump();
    std::string header(kMagic, sizeof(kMagic));
    put<uint32_t>(header, kVersion);
    put<uint32_t>(header, static_cast<uint32_t>(meta_text.size()));
    header += meta_text;

    const auto ls = layers();
    put<uint32_t>(header, static_cast<uint32_t>(2 * ls.size()));
    std::string data;
    for (const auto& [name, l] : ls) {
        // Weights row-major so the file layout is independent of Eigen's storage order.
        const std::string wname = name + ".weight";
        put<uint32_t>(header, static_cast<uint32_t>(wname.size()));
        header += wname;
        put<uint32_t>(header, 2);
        put<uint64_t>(header, static_cast<uint64_t>(l->W.rows()));
        put<uint64_t>(header, static_cast<uint64_t>(l->W.cols()));
        put<uint64_t>(header, static_cast<uint64_t>(data.size()));
        for (Eigen::Index r = 0; r < l->W.rows(); ++r) {
            for (Eigen::Index col = 0; col < l->W.cols(); ++col) put<float>(data, l->W(r, col));
        }
        const std::string bname = name + ".bias";
        put<uint32_t>(header, static_cast<uint32_t>(bname.size()));
        header += bname;
        put<uint32_t>(header, 1);
        put<uint64_t>(header, static_cast<uint64_t>(l->b.size()));
        put<uint64_t>(header, static_cast<uint64_t>(data.size()));
        for (Eigen::Index r = 0; r < l->b.size(); ++r) put<float>(data, l->b(r));
    }
    put<uint64_t>(header, static_cast<uint64_t>(data.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

std::pair<std::shared_ptr<MlpDenoiser>, std::string> MlpDenoiser::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{buf};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw InvalidInput("bad checkpoint magic");
    if (r.get<uint32_t>() != kVersion) throw InvalidInput("unsupported checkpoint version");
    const std::string meta = r.bytes(r.get<uint32_t>());

    struct Entry {
        std::string name;
        std::vector<uint64_t> dims;
        uint64_t offset;
    };
    std::vector<Entry> entries(r.get<uint32_t>());
    for (auto& e : entries) {
        e.name = r.bytes(r.get<uint32_t>());
        const uint32_t nd = r.get<uint32_t>();
        if (nd == 0 || nd > 2) throw InvalidInput("bad tensor rank in checkpoint");
        for (uint32_t i = 0; i < nd; ++i) e.dims.push_back(r.get<uint64_t>());
        e.offset = r.get<uint64_t>();
    }
    const uint64_t data_len = r.get<uint64_t>();
    if (r.pos + data_len != buf.size()) throw InvalidInput("checkpoint length mismatch");
    const size_t data_start = r.pos;

    MlpShape shape = shape_from_metadata(meta);
    auto net = std::make_shared<MlpDenoiser>(shape, 0);
    auto ls = net->layers();
    if (entries.size() != 2 * ls.size()) throw InvalidInput("checkpoint tensor count mismatch");
    for (size_t i = 0; i < ls.size(); ++i) {
        Linear& l = *ls[i].second;
        const Entry& w = entries[2 * i];
        const Entry& b = entries[2 * i + 1];
        if (w.name != ls[i].first + ".weight" || b.name != ls[i].first + ".bias" || w.dims.size() != 2 ||
            b.dims.size() != 1 || w.dims[0] != static_cast<uint64_t>(l.W.rows()) ||
            w.dims[1] != static_cast<uint64_t>(l.W.cols()) || b.dims[0] != static_cast<uint64_t>(l.b.size())) {
            throw InvalidInput("checkpoint tensor " + w.name + " does not match the architecture");
        }
        const uint64_t wbytes = 4 * w.dims[0] * w.dims[1], bbytes = 4 * b.dims[0];
        if (w.offset + wbytes > data_len || b.offset + bbytes > data_len) {
            throw InvalidInput("checkpoint tensor out of range");
        }
        Reader wr{buf, data_start + w.offset};
        for (Eigen::Index row = 0; row < l.W.rows(); ++row) {
            for (Eigen::Index col = 0; col < l.W.cols(); ++col) l.W(row, col) = wr.get<float>();
        }
        Reader br{buf, data_start + b.offset};
        for (Eigen::Index row = 0; row < l.b.size(); ++row) l.b(row) = br.get<float>();
    }
    return {net, meta};
}

}  // namespace form
