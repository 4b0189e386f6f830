#include "bnat/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bnat {

namespace {

std::string shape_str(const Eigen::MatrixXd& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%ldx%ld", static_cast<long>(m.rows()),
                  static_cast<long>(m.cols()));
    return buf;
}

void require_vec(const Eigen::VectorXd& v, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(v.size()) != n)
        throw ConfigError(std::string(what) + ": expected length " + std::to_string(n) +
                          ", got " + std::to_string(v.size()));
}

void require_cols(const Eigen::MatrixXd& m, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(m.cols()) != n)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(n) +
                          " columns, got " + shape_str(m));
}

inline Eigen::ArrayXd logistic(const Eigen::ArrayXd& x) {
    return 1.0 / (1.0 + (-x).exp());
}

inline Eigen::ArrayXXd logistic(const Eigen::ArrayXXd& x) {
    return 1.0 / (1.0 + (-x).exp());
}

Eigen::MatrixXd sample_binary(const Eigen::MatrixXd& probs, Rng& rng) {
    Eigen::MatrixXd out(probs.rows(), probs.cols());
    // Row-major draw order: one draw per unit per sample, fixed traversal
    // so the stream is reproducible across Eigen versions.
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index j = 0; j < probs.cols(); ++j)
            out(i, j) = rng.uniform() < probs(i, j) ? 1.0 : 0.0;
    return out;
}

} // namespace

void Architecture::validate() const {
    if (input_dim == 0) throw ConfigError("architecture: input_dim must be positive");
    if (hidden.empty()) throw ConfigError("architecture: at least one hidden layer required");
    for (std::size_t h : hidden)
        if (h == 0) throw ConfigError("architecture: hidden layer width must be positive");
    if (classes < 2) throw ConfigError("architecture: need at least 2 classes");
}

std::vector<std::size_t> Architecture::dims() const {
    std::vector<std::size_t> d;
    d.reserve(hidden.size() + 2);
    d.push_back(input_dim);
    d.insert(d.end(), hidden.begin(), hidden.end());
    d.push_back(classes);
    return d;
}

std::size_t Architecture::param_count() const {
    validate();
    std::size_t n = input_dim * hidden[0] + input_dim + hidden[0];
    for (std::size_t i = 1; i < hidden.size(); ++i)
        n += hidden[i - 1] * hidden[i] + hidden[i - 1] + hidden[i];
    n += hidden.back() * classes + classes;
    return n;
}

void DbnModel::validate() const {
    arch.validate();
    if (grbm.visible_units() != arch.input_dim || grbm.hidden_units() != arch.hidden[0])
        throw ConfigError("model: Gaussian layer shape disagrees with architecture");
    require_vec(grbm.visible_bias, arch.input_dim, "model: Gaussian visible bias");
    require_vec(grbm.hidden_bias, arch.hidden[0], "model: Gaussian hidden bias");
    require_vec(grbm.sigma, arch.input_dim, "model: sigma");
    if ((grbm.sigma.array() <= 0.0).any())
        throw ConfigError("model: sigma must be positive");
    if (rbms.size() != arch.rbm_count())
        throw ConfigError("model: expected " + std::to_string(arch.rbm_count()) +
                          " upper layers, got " + std::to_string(rbms.size()));
    for (std::size_t i = 0; i < rbms.size(); ++i) {
        if (rbms[i].visible_units() != arch.hidden[i] ||
            rbms[i].hidden_units() != arch.hidden[i + 1])
            throw ConfigError("model: layer " + std::to_string(i + 1) +
                              " shape disagrees with architecture");
    }
    if (head.input_dim() != arch.last_hidden() || head.classes() != arch.classes)
        throw ConfigError("model: head shape disagrees with architecture");
}

void TrainConfig::validate() const {
    arch.validate();
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train: learning rate must be positive and finite");
    if (cd_steps < 1) throw ConfigError("train: cd steps must be at least 1");
    if (batch_size == 0) throw ConfigError("train: batch size must be positive");
    // iterations == 0 is legal: a zero-budget run returns the initial model.
}

// --- energies ---------------------------------------------------------------

double grbm_energy(const GrbmLayer& layer, const Eigen::VectorXd& v,
                   const Eigen::VectorXd& h) {
    require_vec(v, layer.visible_units(), "grbm energy: visible");
    require_vec(h, layer.hidden_units(), "grbm energy: hidden");
    const Eigen::ArrayXd centered = v.array() - layer.visible_bias.array();
    const double quad = (centered.square() / (2.0 * layer.sigma.array().square())).sum();
    const Eigen::VectorXd scaled_v = (v.array() / layer.sigma.array()).matrix();
    const double interaction = scaled_v.dot(layer.weights * h);
    return quad - interaction - layer.hidden_bias.dot(h);
}

double rbm_energy(const RbmLayer& layer, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& h) {
    require_vec(v, layer.visible_units(), "rbm energy: visible");
    require_vec(h, layer.hidden_units(), "rbm energy: hidden");
    return -layer.visible_bias.dot(v) - v.dot(layer.weights * h) - layer.hidden_bias.dot(h);
}

// --- conditionals ------------------------------------------------------------

Eigen::VectorXd grbm_hidden_conditional(const GrbmLayer& layer, const Eigen::VectorXd& v) {
    require_vec(v, layer.visible_units(), "grbm conditional: visible");
    const Eigen::VectorXd scaled = (v.array() / layer.sigma.array()).matrix();
    return logistic((layer.weights.transpose() * scaled + layer.hidden_bias).array());
}

Eigen::MatrixXd grbm_hidden_conditional(const GrbmLayer& layer, const Eigen::MatrixXd& batch) {
    require_cols(batch, layer.visible_units(), "grbm conditional: batch");
    const Eigen::MatrixXd scaled =
        batch.array().rowwise() / layer.sigma.transpose().array();
    Eigen::MatrixXd act = scaled * layer.weights;
    act.rowwise() += layer.hidden_bias.transpose();
    return logistic(act.array());
}

Eigen::VectorXd rbm_hidden_conditional(const RbmLayer& layer, const Eigen::VectorXd& v) {
    require_vec(v, layer.visible_units(), "rbm conditional: visible");
    return logistic((layer.weights.transpose() * v + layer.hidden_bias).array());
}

Eigen::MatrixXd rbm_hidden_conditional(const RbmLayer& layer, const Eigen::MatrixXd& batch) {
    require_cols(batch, layer.visible_units(), "rbm conditional: batch");
    Eigen::MatrixXd act = batch * layer.weights;
    act.rowwise() += layer.hidden_bias.transpose();
    return logistic(act.array());
}

Eigen::VectorXd grbm_visible_mean(const GrbmLayer& layer, const Eigen::VectorXd& h) {
    require_vec(h, layer.hidden_units(), "grbm visible mean: hidden");
    return layer.visible_bias.array() + layer.sigma.array() * (layer.weights * h).array();
}

Eigen::MatrixXd grbm_visible_mean(const GrbmLayer& layer, const Eigen::MatrixXd& hidden) {
    require_cols(hidden, layer.hidden_units(), "grbm visible mean: hidden");
    Eigen::MatrixXd mean =
        (hidden * layer.weights.transpose()).array().rowwise() *
        layer.sigma.transpose().array();
    mean.rowwise() += layer.visible_bias.transpose();
    return mean;
}

Eigen::VectorXd rbm_visible_conditional(const RbmLayer& layer, const Eigen::VectorXd& h) {
    require_vec(h, layer.hidden_units(), "rbm visible conditional: hidden");
    return logistic((layer.weights * h + layer.visible_bias).array());
}

Eigen::MatrixXd rbm_visible_conditional(const RbmLayer& layer, const Eigen::MatrixXd& hidden) {
    require_cols(hidden, layer.hidden_units(), "rbm visible conditional: hidden");
    Eigen::MatrixXd act = hidden * layer.weights.transpose();
    act.rowwise() += layer.visible_bias.transpose();
    return logistic(act.array());
}

// --- moments and CD ----------------------------------------------------------

namespace {

// Batch-mean statistics for the Gaussian layer at (visible, hidden-prob).
LayerMoments grbm_moments_at(const GrbmLayer& layer, const Eigen::MatrixXd& visible,
                             const Eigen::MatrixXd& hidden) {
    const double n = static_cast<double>(visible.rows());
    const Eigen::MatrixXd scaled =
        visible.array().rowwise() / layer.sigma.transpose().array();
    LayerMoments m;
    m.weight = scaled.transpose() * hidden / n;
    m.visible = ((visible.rowwise() - layer.visible_bias.transpose()).array().rowwise() /
                 layer.sigma.transpose().array().square())
                    .colwise()
                    .mean();
    m.hidden = hidden.colwise().mean();
    return m;
}

LayerMoments rbm_moments_at(const Eigen::MatrixXd& visible, const Eigen::MatrixXd& hidden) {
    const double n = static_cast<double>(visible.rows());
    LayerMoments m;
    m.weight = visible.transpose() * hidden / n;
    m.visible = visible.colwise().mean();
    m.hidden = hidden.colwise().mean();
    return m;
}

} // namespace

LayerMoments grbm_data_moments(const GrbmLayer& layer, const Eigen::MatrixXd& batch) {
    require_cols(batch, layer.visible_units(), "grbm data moments: batch");
    if (batch.rows() == 0) throw ConfigError("grbm data moments: empty batch");
    return grbm_moments_at(layer, batch, grbm_hidden_conditional(layer, batch));
}

LayerMoments rbm_data_moments(const RbmLayer& layer, const Eigen::MatrixXd& batch) {
    require_cols(batch, layer.visible_units(), "rbm data moments: batch");
    if (batch.rows() == 0) throw ConfigError("rbm data moments: empty batch");
    return rbm_moments_at(batch, rbm_hidden_conditional(layer, batch));
}

LayerMoments grbm_chain_moments(const GrbmLayer& layer, const Eigen::MatrixXd& batch,
                                int cd_steps, Rng& rng) {
    require_cols(batch, layer.visible_units(), "grbm chain moments: batch");
    if (batch.rows() == 0) throw ConfigError("grbm chain moments: empty batch");
    if (cd_steps < 1) throw ConfigError("grbm chain moments: cd steps must be at least 1");
    Eigen::MatrixXd v = batch;
    for (int step = 0; step < cd_steps; ++step) {
        const Eigen::MatrixXd h = sample_binary(grbm_hidden_conditional(layer, v), rng);
        v = grbm_visible_mean(layer, h);
    }
    return grbm_moments_at(layer, v, grbm_hidden_conditional(layer, v));
}

LayerMoments rbm_chain_moments(const RbmLayer& layer, const Eigen::MatrixXd& batch,
                               int cd_steps, Rng& rng) {
    require_cols(batch, layer.visible_units(), "rbm chain moments: batch");
    if (batch.rows() == 0) throw ConfigError("rbm chain moments: empty batch");
    if (cd_steps < 1) throw ConfigError("rbm chain moments: cd steps must be at least 1");
    Eigen::MatrixXd v = batch;
    for (int step = 0; step < cd_steps; ++step) {
        const Eigen::MatrixXd h = sample_binary(rbm_hidden_conditional(layer, v), rng);
        v = rbm_visible_conditional(layer, h);
    }
    return rbm_moments_at(v, rbm_hidden_conditional(layer, v));
}

LayerGradient gradient_from_moments(const LayerMoments& data, const LayerMoments& model) {
    LayerGradient g;
    g.weights = data.weight - model.weight;
    g.visible_bias = data.visible - model.visible;
    g.hidden_bias = data.hidden - model.hidden;
    return g;
}

LayerGradient grbm_cd_gradient(const GrbmLayer& layer, const Eigen::MatrixXd& batch,
                               int cd_steps, Rng& rng) {
    return gradient_from_moments(grbm_data_moments(layer, batch),
                                 grbm_chain_moments(layer, batch, cd_steps, rng));
}

LayerGradient rbm_cd_gradient(const RbmLayer& layer, const Eigen::MatrixXd& batch,
                              int cd_steps, Rng& rng) {
    return gradient_from_moments(rbm_data_moments(layer, batch),
                                 rbm_chain_moments(layer, batch, cd_steps, rng));
}

// --- forward / head ----------------------------------------------------------

Eigen::VectorXd forward(const DbnModel& model, const Eigen::VectorXd& x) {
    Eigen::VectorXd a = grbm_hidden_conditional(model.grbm, x);
    for (const RbmLayer& rbm : model.rbms) a = rbm_hidden_conditional(rbm, a);
    return a;
}

Eigen::MatrixXd forward(const DbnModel& model, const Eigen::MatrixXd& batch) {
    Eigen::MatrixXd a = grbm_hidden_conditional(model.grbm, batch);
    for (const RbmLayer& rbm : model.rbms) a = rbm_hidden_conditional(rbm, a);
    return a;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
    const Eigen::ArrayXd e = shifted.exp();
    return e / e.sum();
}

Eigen::MatrixXd head_probs(const SoftmaxHead& head, const Eigen::MatrixXd& hidden) {
    require_cols(hidden, head.input_dim(), "head: hidden");
    Eigen::MatrixXd logits = hidden * head.weights;
    logits.rowwise() += head.bias.transpose();
    const Eigen::ArrayXXd shifted =
        logits.array().colwise() - logits.rowwise().maxCoeff().array();
    Eigen::ArrayXXd e = shifted.exp();
    return (e.colwise() / e.rowwise().sum()).matrix();
}

Eigen::VectorXd predict_proba(const DbnModel& model, const Eigen::VectorXd& x) {
    return softmax(model.head.weights.transpose() * forward(model, x) + model.head.bias);
}

ClassLabel predict(const DbnModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd p = predict_proba(model, x);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    return ClassLabel::from_index(static_cast<std::size_t>(best));
}

std::vector<ClassLabel> predict(const DbnModel& model, const Eigen::MatrixXd& batch) {
    const Eigen::MatrixXd probs = head_probs(model.head, forward(model, batch));
    std::vector<ClassLabel> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        probs.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = ClassLabel::from_index(static_cast<std::size_t>(best));
    }
    return out;
}

double head_log_likelihood(const SoftmaxHead& head, const Eigen::MatrixXd& hidden,
                           const std::vector<ClassLabel>& labels) {
    if (static_cast<std::size_t>(hidden.rows()) != labels.size())
        throw ConfigError("head log-likelihood: row/label count mismatch");
    if (labels.empty()) throw ConfigError("head log-likelihood: empty batch");
    const Eigen::MatrixXd probs = head_probs(head, hidden);
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const std::size_t u = labels[static_cast<std::size_t>(i)].index();
        if (u >= head.classes())
            throw DataError("head log-likelihood: label outside head range");
        total += std::log(probs(i, static_cast<Eigen::Index>(u)));
    }
    return total / static_cast<double>(labels.size());
}

HeadGradient head_gradient(const SoftmaxHead& head, const Eigen::MatrixXd& hidden,
                           const std::vector<ClassLabel>& labels) {
    if (static_cast<std::size_t>(hidden.rows()) != labels.size())
        throw ConfigError("head gradient: row/label count mismatch");
    if (labels.empty()) throw ConfigError("head gradient: empty batch");
    Eigen::MatrixXd residual = -head_probs(head, hidden); // onehot - p, built in place
    for (Eigen::Index i = 0; i < residual.rows(); ++i) {
        const std::size_t u = labels[static_cast<std::size_t>(i)].index();
        if (u >= head.classes()) throw DataError("head gradient: label outside head range");
        residual(i, static_cast<Eigen::Index>(u)) += 1.0;
    }
    const double n = static_cast<double>(labels.size());
    HeadGradient g;
    g.weights = hidden.transpose() * residual / n;
    g.bias = residual.colwise().mean();
    return g;
}

// --- assembled gradient and update -------------------------------------------

std::uint64_t gradient_block_seed(std::uint64_t seed, std::size_t block) {
    return mix_seed(seed, 0x67726164 /*"grad"*/, static_cast<std::uint64_t>(block));
}

GradientBundle total_gradient(const DbnModel& model, const Eigen::MatrixXd& batch,
                              const std::vector<ClassLabel>& labels, int cd_steps,
                              std::uint64_t seed) {
    if (static_cast<std::size_t>(batch.rows()) != labels.size())
        throw ConfigError("total gradient: row/label count mismatch");
    if (labels.empty()) throw ConfigError("total gradient: empty batch");

    GradientBundle bundle;
    bundle.batch_size = labels.size();

    Rng grbm_rng(gradient_block_seed(seed, 0));
    bundle.grbm = grbm_cd_gradient(model.grbm, batch, cd_steps, grbm_rng);

    Eigen::MatrixXd activation = grbm_hidden_conditional(model.grbm, batch);
    bundle.rbms.reserve(model.rbms.size());
    for (std::size_t i = 0; i < model.rbms.size(); ++i) {
        Rng rng(gradient_block_seed(seed, i + 1));
        bundle.rbms.push_back(rbm_cd_gradient(model.rbms[i], activation, cd_steps, rng));
        activation = rbm_hidden_conditional(model.rbms[i], activation);
    }
    bundle.head = head_gradient(model.head, activation, labels);
    return bundle;
}

void apply_update(DbnModel& model, const GradientBundle& gradient, double eps) {
    if (gradient.rbms.size() != model.rbms.size())
        throw ConfigError("apply update: layer count mismatch");
    model.grbm.weights += eps * gradient.grbm.weights;
    model.grbm.visible_bias += eps * gradient.grbm.visible_bias;
    model.grbm.hidden_bias += eps * gradient.grbm.hidden_bias;
    for (std::size_t i = 0; i < model.rbms.size(); ++i) {
        model.rbms[i].weights += eps * gradient.rbms[i].weights;
        model.rbms[i].visible_bias += eps * gradient.rbms[i].visible_bias;
        model.rbms[i].hidden_bias += eps * gradient.rbms[i].hidden_bias;
    }
    model.head.weights += eps * gradient.head.weights;
    model.head.bias += eps * gradient.head.bias;
}

// --- flat encoding -----------------------------------------------------------

namespace {

void append_matrix(std::vector<double>& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

void append_vector(std::vector<double>& out, const Eigen::VectorXd& v) {
    out.insert(out.end(), v.data(), v.data() + v.size());
}

class FlatReader {
  public:
    FlatReader(std::span<const double> flat, const char* what)
        : flat_(flat), what_(what) {}

    Eigen::MatrixXd matrix(std::size_t rows, std::size_t cols) {
        Eigen::MatrixXd m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = next();
        return m;
    }

    Eigen::VectorXd vector(std::size_t n) {
        Eigen::VectorXd v(n);
        for (std::size_t i = 0; i < n; ++i) v(i) = next();
        return v;
    }

    void finish() const {
        if (pos_ != flat_.size())
            throw ConfigError(std::string(what_) + ": " + std::to_string(flat_.size()) +
                              " values, consumed " + std::to_string(pos_));
    }

  private:
    double next() {
        if (pos_ >= flat_.size())
            throw ConfigError(std::string(what_) + ": flat vector too short");
        return flat_[pos_++];
    }

    std::span<const double> flat_;
    const char* what_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<double> flatten(const GradientBundle& bundle) {
    std::vector<double> out;
    append_matrix(out, bundle.grbm.weights);
    append_vector(out, bundle.grbm.visible_bias);
    append_vector(out, bundle.grbm.hidden_bias);
    for (const LayerGradient& g : bundle.rbms) {
        append_matrix(out, g.weights);
        append_vector(out, g.visible_bias);
        append_vector(out, g.hidden_bias);
    }
    append_matrix(out, bundle.head.weights);
    append_vector(out, bundle.head.bias);
    return out;
}

std::vector<double> flatten(const DbnModel& model) {
    std::vector<double> out;
    out.reserve(model.arch.param_count());
    append_matrix(out, model.grbm.weights);
    append_vector(out, model.grbm.visible_bias);
    append_vector(out, model.grbm.hidden_bias);
    for (const RbmLayer& rbm : model.rbms) {
        append_matrix(out, rbm.weights);
        append_vector(out, rbm.visible_bias);
        append_vector(out, rbm.hidden_bias);
    }
    append_matrix(out, model.head.weights);
    append_vector(out, model.head.bias);
    return out;
}

GradientBundle unflatten_gradient(std::span<const double> flat, const Architecture& arch) {
    arch.validate();
    if (flat.size() != arch.param_count())
        throw ConfigError("unflatten gradient: expected " +
                          std::to_string(arch.param_count()) + " values, got " +
                          std::to_string(flat.size()));
    FlatReader r(flat, "unflatten gradient");
    GradientBundle b;
    b.grbm.weights = r.matrix(arch.input_dim, arch.hidden[0]);
    b.grbm.visible_bias = r.vector(arch.input_dim);
    b.grbm.hidden_bias = r.vector(arch.hidden[0]);
    for (std::size_t i = 1; i < arch.hidden.size(); ++i) {
        LayerGradient g;
        g.weights = r.matrix(arch.hidden[i - 1], arch.hidden[i]);
        g.visible_bias = r.vector(arch.hidden[i - 1]);
        g.hidden_bias = r.vector(arch.hidden[i]);
        b.rbms.push_back(std::move(g));
    }
    b.head.weights = r.matrix(arch.last_hidden(), arch.classes);
    b.head.bias = r.vector(arch.classes);
    r.finish();
    return b;
}

DbnModel unflatten_model(std::span<const double> flat, const Architecture& arch) {
    arch.validate();
    if (flat.size() != arch.param_count())
        throw ConfigError("unflatten model: expected " + std::to_string(arch.param_count()) +
                          " values, got " + std::to_string(flat.size()));
    FlatReader r(flat, "unflatten model");
    DbnModel m;
    m.arch = arch;
    m.grbm.weights = r.matrix(arch.input_dim, arch.hidden[0]);
    m.grbm.visible_bias = r.vector(arch.input_dim);
    m.grbm.hidden_bias = r.vector(arch.hidden[0]);
    m.grbm.sigma = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arch.input_dim));
    for (std::size_t i = 1; i < arch.hidden.size(); ++i) {
        RbmLayer rbm;
        rbm.weights = r.matrix(arch.hidden[i - 1], arch.hidden[i]);
        rbm.visible_bias = r.vector(arch.hidden[i - 1]);
        rbm.hidden_bias = r.vector(arch.hidden[i]);
        m.rbms.push_back(std::move(rbm));
    }
    m.head.weights = r.matrix(arch.last_hidden(), arch.classes);
    m.head.bias = r.vector(arch.classes);
    r.finish();
    return m;
}

DbnModel init_model(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(mix_seed(seed, 0x696e6974 /*"init"*/));
    const auto gauss_matrix = [&rng](std::size_t rows, std::size_t cols) {
        Eigen::MatrixXd m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = 0.01 * rng.gaussian();
        return m;
    };

    DbnModel model;
    model.arch = arch;
    model.grbm.weights = gauss_matrix(arch.input_dim, arch.hidden[0]);
    model.grbm.visible_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.input_dim));
    model.grbm.hidden_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.hidden[0]));
    model.grbm.sigma = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arch.input_dim));
    for (std::size_t i = 1; i < arch.hidden.size(); ++i) {
        RbmLayer rbm;
        rbm.weights = gauss_matrix(arch.hidden[i - 1], arch.hidden[i]);
        rbm.visible_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.hidden[i - 1]));
        rbm.hidden_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.hidden[i]));
        model.rbms.push_back(std::move(rbm));
    }
    model.head.weights = gauss_matrix(arch.last_hidden(), arch.classes);
    model.head.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.classes));
    return model;
}

} // namespace bnat
