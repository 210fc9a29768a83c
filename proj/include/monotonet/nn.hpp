#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "monotonet/rng.hpp"
#include "monotonet/tape.hpp"

namespace monotonet {

enum class Activation { Relu, Tanh };
enum class TaskKind { Regression, BinaryClassification, MultiClassification };

inline std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }
inline std::string to_string(TaskKind t) {
    switch (t) {
        case TaskKind::Regression: return "regression";
        case TaskKind::BinaryClassification: return "binary";
        case TaskKind::MultiClassification: return "multiclass";
    }
    return "?";
}

struct DenseLayer {
    Tensor W;  // out x in
    Tensor b;  // out
};

struct MlpSpec {
    std::size_t in_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t out_dim = 1;
    Activation activation = Activation::Relu;
    bool split_first = false;          // first layer as two blocks over x_M / x_complement
    std::vector<std::size_t> mono_dims;  // M, 0-based
    TaskKind task = TaskKind::Regression;
};

// Plain dense network. When split_first is set the first hidden layer is two
// disjoint blocks, one reading only the monotone dimensions and one reading
// the rest; their outputs are concatenated before the activation.
class MlpModel {
public:
    MlpSpec spec;
    DenseLayer split_m;     // used iff spec.split_first
    DenseLayer split_rest;  // used iff spec.split_first
    std::vector<DenseLayer> layers;

    static MlpModel init(const MlpSpec& s, Rng& rng) {
        if (s.in_dim == 0) throw std::invalid_argument("MlpModel: in_dim must be positive");
        if (s.out_dim == 0) throw std::invalid_argument("MlpModel: out_dim must be positive");
        for (std::size_t d : s.mono_dims)
            if (d >= s.in_dim) throw std::invalid_argument("MlpModel: monotone dimension out of range");
        MlpModel m;
        m.spec = s;

        std::size_t prev = s.in_dim;
        std::size_t first = 0;
        if (!s.hidden.empty()) first = s.hidden[0];

        if (s.split_first) {
            if (s.hidden.empty())
                throw std::invalid_argument("MlpModel: split_first needs at least one hidden layer");
            const std::size_t dm = s.mono_dims.size();
            if (dm == 0 || dm == s.in_dim)
                throw std::invalid_argument("MlpModel: split_first needs a proper monotone subset");
            // block widths proportional to the input split, at least one unit each
            std::size_t wm = std::max<std::size_t>(1, first * dm / s.in_dim);
            wm = std::min(wm, first - 1);
            const std::size_t wr = first - wm;
            m.split_m = init_layer(wm, dm, rng);
            m.split_rest = init_layer(wr, s.in_dim - dm, rng);
            prev = first;
        }

        for (std::size_t i = s.split_first ? 1 : 0; i < s.hidden.size(); ++i) {
            m.layers.push_back(init_layer(s.hidden[i], prev, rng));
            prev = s.hidden[i];
        }
        m.layers.push_back(init_layer(s.out_dim, prev, rng));
        return m;
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> out;
        if (spec.split_first) {
            out.push_back(&split_m.W);
            out.push_back(&split_m.b);
            out.push_back(&split_rest.W);
            out.push_back(&split_rest.b);
        }
        for (auto& l : layers) {
            out.push_back(&l.W);
            out.push_back(&l.b);
        }
        return out;
    }
    std::vector<const Tensor*> params() const {
        auto mut = const_cast<MlpModel*>(this)->params();
        return std::vector<const Tensor*>(mut.begin(), mut.end());
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Tensor* p : params()) n += p->size();
        return n;
    }

private:
    static DenseLayer init_layer(std::size_t out, std::size_t in, Rng& rng) {
        // Glorot-style uniform bounds keep activations on a sane scale
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        DenseLayer l{Tensor(Shape{out, in}), Tensor(Shape{out})};
        for (auto& w : l.W.data()) w = rng.uniform(-bound, bound);
        return l;
    }
};

// Parameters of a model bound onto a tape as leaf nodes, in params() order.
struct BoundParams {
    std::vector<Var> vars;
};

inline BoundParams bind_params(Tape& t, const MlpModel& m) {
    BoundParams bp;
    for (const Tensor* p : m.params()) bp.vars.push_back(leaf(t, *p));
    return bp;
}

namespace detail {

inline Var activate(Var z, Activation a) {
    return a == Activation::Relu ? relu(z) : monotonet::tanh(z);
}

// selection matrix picking the given input columns: (in_dim x |dims|)
inline Tensor column_selector(std::size_t in_dim, const std::vector<std::size_t>& dims) {
    Tensor sel(Shape{in_dim, dims.size()});
    for (std::size_t j = 0; j < dims.size(); ++j) sel(dims[j], j) = 1.0;
    return sel;
}

inline std::vector<std::size_t> complement_dims(std::size_t in_dim,
                                                const std::vector<std::size_t>& dims) {
    std::vector<bool> used(in_dim, false);
    for (std::size_t d : dims) used[d] = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < in_dim; ++i)
        if (!used[i]) out.push_back(i);
    return out;
}

// z = X W^T + b broadcast over rows
inline Var affine(Var X, Var W, Var b) {
    Var z = matmul(X, transpose(W));
    return add(z, bcast_axis0(b, X.value().rows()));
}

} // namespace detail

// Forward pass on a tape for a batch X (rows are examples). Returns the
// output matrix (m x out_dim) plus every post-activation hidden layer, which
// the sliced classifier and its penalty read back.
struct ForwardTrace {
    Var output;
    std::vector<Var> hidden;  // post-activation, one per hidden layer
};

inline ForwardTrace mlp_forward(Tape& t, const MlpModel& m, const BoundParams& bp, Var X) {
    if (X.value().rank() != 2 || X.value().cols() != m.spec.in_dim)
        throw std::invalid_argument("mlp_forward: input must be (m x in_dim)");
    ForwardTrace tr;
    std::size_t pi = 0;
    Var h = X;
    if (m.spec.split_first) {
        Var Wm = bp.vars[pi++], bm = bp.vars[pi++];
        Var Wr = bp.vars[pi++], br = bp.vars[pi++];
        const auto rest = detail::complement_dims(m.spec.in_dim, m.spec.mono_dims);
        Var Xm = matmul(X, constant(t, detail::column_selector(m.spec.in_dim, m.spec.mono_dims)));
        Var Xr = matmul(X, constant(t, detail::column_selector(m.spec.in_dim, rest)));
        Var zm = detail::affine(Xm, Wm, bm);
        Var zr = detail::affine(Xr, Wr, br);
        h = detail::activate(concat({zm, zr}), m.spec.activation);
        tr.hidden.push_back(h);
    }
    const std::size_t nlayers = m.layers.size();
    for (std::size_t i = 0; i < nlayers; ++i) {
        Var W = bp.vars[pi++], b = bp.vars[pi++];
        Var z = detail::affine(h, W, b);
        if (i + 1 < nlayers) {
            h = detail::activate(z, m.spec.activation);
            tr.hidden.push_back(h);
        } else {
            h = z;  // linear head
        }
    }
    tr.output = h;
    return tr;
}

// Single-point prediction.
inline Tensor predict(const MlpModel& m, const std::vector<double>& x) {
    if (x.size() != m.spec.in_dim)
        throw std::invalid_argument("predict: input length does not match in_dim");
    Tape t;
    BoundParams bp = bind_params(t, m);
    Var X = constant(t, Tensor::matrix(1, x.size(), x));
    ForwardTrace tr = mlp_forward(t, m, bp, X);
    Tensor out(Shape{m.spec.out_dim});
    for (std::size_t j = 0; j < m.spec.out_dim; ++j) out[j] = tr.output.value()(0, j);
    return out;
}

inline Tensor predict_batch(const MlpModel& m, const Tensor& X) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    ForwardTrace tr = mlp_forward(t, m, bp, constant(t, X));
    return tr.output.value();
}

// Reduces the network to the scalar h used by monotonicity constraints:
// the regression output or the binary score.
inline Var scalar_output(Var output) {
    if (output.value().cols() != 1)
        throw std::invalid_argument("scalar_output: model output is not a single score");
    return output;  // (m x 1)
}

// The matrix of per-example input gradients dh/dx for a batch, as a live
// tape node (m x in_dim). Rows are independent, so the gradient of the
// summed scores stacks exactly the per-example gradients.
inline Var input_gradient_matrix(Tape& t, const MlpModel& m, const BoundParams& bp, Var X) {
    ForwardTrace tr = mlp_forward(t, m, bp, X);
    Var s = sum_all(scalar_output(tr.output));
    return gradient(s, X);
}

// Per-point gradients along the requested dimensions; plain values.
inline std::vector<double> input_gradients(const MlpModel& m, const std::vector<double>& x,
                                           const std::vector<std::size_t>& dims) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    Var X = leaf(t, Tensor::matrix(1, x.size(), x));
    Var G = input_gradient_matrix(t, m, bp, X);
    std::vector<double> out;
    out.reserve(dims.size());
    for (std::size_t d : dims) {
        if (d >= m.spec.in_dim) throw std::invalid_argument("input_gradients: dimension out of range");
        out.push_back(G.value()(0, d));
    }
    return out;
}

// ---- sliced classifier -----------------------------------------------------

// Classifier whose designated hidden layer is split into K equal contiguous
// slices, one per class. Leftover units when K does not divide the width
// belong to no slice.
class SlicedClassifier {
public:
    MlpModel mlp;
    std::size_t num_classes = 0;
    std::size_t slice_layer = 0;  // index into ForwardTrace::hidden

    static SlicedClassifier init(const MlpSpec& spec, std::size_t K, std::size_t slice_layer,
                                 Rng& rng) {
        if (K < 2) throw std::invalid_argument("SlicedClassifier: need at least two classes");
        if (spec.out_dim != K)
            throw std::invalid_argument("SlicedClassifier: out_dim must equal the class count");
        if (spec.hidden.empty() || slice_layer >= spec.hidden.size())
            throw std::invalid_argument("SlicedClassifier: slice layer out of range");
        if (spec.hidden[slice_layer] < K)
            throw std::invalid_argument("SlicedClassifier: sliced layer narrower than the class count");
        SlicedClassifier c;
        c.mlp = MlpModel::init(spec, rng);
        c.num_classes = K;
        c.slice_layer = slice_layer;
        return c;
    }

    std::size_t slice_width() const { return mlp.spec.hidden[slice_layer] / num_classes; }
    std::size_t slice_start(std::size_t k) const { return k * slice_width(); }

    // T_k for a batch: sum of the slice's activations per example -> (m x K)
    // columns, returned as K column vectors of length m.
    std::vector<Var> total_activations(Tape& t, const BoundParams& bp, Var X) const {
        ForwardTrace tr = mlp_forward(t, mlp, bp, X);
        return slice_sums(tr.hidden[slice_layer]);
    }

    std::vector<Var> slice_sums(Var acts) const {
        std::vector<Var> out;
        out.reserve(num_classes);
        for (std::size_t k = 0; k < num_classes; ++k)
            out.push_back(sum_axis1(slice(acts, slice_start(k), slice_width())));
        return out;
    }

    // O_k for a batch: per-example sums over slice k of d logit_k / d a_w.
    // One reverse pass per class.
    std::vector<Var> total_gradients(Tape& t, const BoundParams& bp, Var X) const {
        ForwardTrace tr = mlp_forward(t, mlp, bp, X);
        Var acts = tr.hidden[slice_layer];
        std::vector<Var> out;
        out.reserve(num_classes);
        for (std::size_t k = 0; k < num_classes; ++k) {
            Var logit_sum = sum_all(slice(tr.output, k, 1));
            Var G = gradient(logit_sum, acts);  // (m x W)
            out.push_back(sum_axis1(slice(G, slice_start(k), slice_width())));
        }
        return out;
    }
};

// T_k(x) as plain values for a single input.
inline std::vector<double> slice_total_activation(const SlicedClassifier& c,
                                                  const std::vector<double>& x) {
    Tape t;
    BoundParams bp = bind_params(t, c.mlp);
    Var X = constant(t, Tensor::matrix(1, x.size(), x));
    auto T = c.total_activations(t, bp, X);
    std::vector<double> out(c.num_classes);
    for (std::size_t k = 0; k < c.num_classes; ++k) out[k] = T[k].value()[0];
    return out;
}

// O_k(x) as plain values for a single input.
inline std::vector<double> slice_total_gradient(const SlicedClassifier& c,
                                                const std::vector<double>& x) {
    Tape t;
    BoundParams bp = bind_params(t, c.mlp);
    Var X = leaf(t, Tensor::matrix(1, x.size(), x));
    auto O = c.total_gradients(t, bp, X);
    std::vector<double> out(c.num_classes);
    for (std::size_t k = 0; k < c.num_classes; ++k) out[k] = O[k].value()[0];
    return out;
}

// Batched T matrix (m x K) as plain values.
inline Tensor total_activation_matrix(const SlicedClassifier& c, const Tensor& X) {
    Tape t;
    BoundParams bp = bind_params(t, c.mlp);
    auto T = c.total_activations(t, bp, constant(t, X));
    Tensor out(Shape{X.rows(), c.num_classes});
    for (std::size_t k = 0; k < c.num_classes; ++k)
        for (std::size_t i = 0; i < X.rows(); ++i) out(i, k) = T[k].value()[i];
    return out;
}

// ---- serialization ---------------------------------------------------------
// Line-oriented text format with hexfloat weights; round-trips bit-exactly.

namespace detail {

inline void write_tensor(std::ostream& os, const char* tag, const Tensor& t) {
    os << tag;
    for (std::size_t e : t.shape()) os << ' ' << e;
    os << '\n';
    os << std::hexfloat;
    for (std::size_t i = 0; i < t.size(); ++i) os << (i ? " " : "") << t[i];
    os << std::defaultfloat << '\n';
}

inline Tensor read_tensor(std::istream& is, const std::string& expect_tag, std::size_t rank) {
    std::string tag;
    is >> tag;
    if (tag != expect_tag) throw std::runtime_error("model load: expected '" + expect_tag + "', got '" + tag + "'");
    Shape shape(rank);
    for (auto& e : shape) is >> e;
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::string tok;
        is >> tok;
        t[i] = std::strtod(tok.c_str(), nullptr);
    }
    if (!is) throw std::runtime_error("model load: truncated tensor " + expect_tag);
    return t;
}

} // namespace detail

inline void save_model(std::ostream& os, const MlpModel& m, const SlicedClassifier* sliced = nullptr) {
    os << "monotonet-model 1\n";
    os << "task " << to_string(m.spec.task) << '\n';
    os << "activation " << to_string(m.spec.activation) << '\n';
    os << "in " << m.spec.in_dim << " out " << m.spec.out_dim << '\n';
    os << "hidden " << m.spec.hidden.size();
    for (std::size_t h : m.spec.hidden) os << ' ' << h;
    os << '\n';
    os << "mono " << m.spec.mono_dims.size();
    for (std::size_t d : m.spec.mono_dims) os << ' ' << d;
    os << '\n';
    os << "split " << (m.spec.split_first ? 1 : 0) << '\n';
    if (m.spec.split_first) {
        detail::write_tensor(os, "Wm", m.split_m.W);
        detail::write_tensor(os, "bm", m.split_m.b);
        detail::write_tensor(os, "Wr", m.split_rest.W);
        detail::write_tensor(os, "br", m.split_rest.b);
    }
    os << "layers " << m.layers.size() << '\n';
    for (const auto& l : m.layers) {
        detail::write_tensor(os, "W", l.W);
        detail::write_tensor(os, "b", l.b);
    }
    if (sliced)
        os << "sliced " << sliced->num_classes << ' ' << sliced->slice_layer << '\n';
    else
        os << "sliced 0\n";
}

struct LoadedModel {
    MlpModel mlp;
    bool has_slices = false;
    std::size_t num_classes = 0;
    std::size_t slice_layer = 0;

    SlicedClassifier as_sliced() const {
        if (!has_slices) throw std::runtime_error("model: no slice structure recorded");
        SlicedClassifier c;
        c.mlp = mlp;
        c.num_classes = num_classes;
        c.slice_layer = slice_layer;
        return c;
    }
};

inline LoadedModel load_model(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "monotonet-model" || version != 1)
        throw std::runtime_error("model load: unrecognized header");
    LoadedModel out;
    MlpSpec& spec = out.mlp.spec;

    std::string key, val;
    is >> key >> val;
    if (key != "task") throw std::runtime_error("model load: expected task");
    if (val == "regression") spec.task = TaskKind::Regression;
    else if (val == "binary") spec.task = TaskKind::BinaryClassification;
    else if (val == "multiclass") spec.task = TaskKind::MultiClassification;
    else throw std::runtime_error("model load: unknown task '" + val + "'");

    is >> key >> val;
    if (key != "activation") throw std::runtime_error("model load: expected activation");
    if (val == "relu") spec.activation = Activation::Relu;
    else if (val == "tanh") spec.activation = Activation::Tanh;
    else throw std::runtime_error("model load: unknown activation '" + val + "'");

    std::string k2;
    is >> key >> spec.in_dim >> k2 >> spec.out_dim;
    if (key != "in" || k2 != "out") throw std::runtime_error("model load: expected in/out");

    std::size_t n = 0;
    is >> key >> n;
    if (key != "hidden") throw std::runtime_error("model load: expected hidden");
    spec.hidden.resize(n);
    for (auto& h : spec.hidden) is >> h;

    is >> key >> n;
    if (key != "mono") throw std::runtime_error("model load: expected mono");
    spec.mono_dims.resize(n);
    for (auto& d : spec.mono_dims) is >> d;

    int split = 0;
    is >> key >> split;
    if (key != "split") throw std::runtime_error("model load: expected split");
    spec.split_first = split != 0;
    if (spec.split_first) {
        out.mlp.split_m.W = detail::read_tensor(is, "Wm", 2);
        out.mlp.split_m.b = detail::read_tensor(is, "bm", 1);
        out.mlp.split_rest.W = detail::read_tensor(is, "Wr", 2);
        out.mlp.split_rest.b = detail::read_tensor(is, "br", 1);
    }

    is >> key >> n;
    if (key != "layers") throw std::runtime_error("model load: expected layers");
    out.mlp.layers.resize(n);
    for (auto& l : out.mlp.layers) {
        l.W = detail::read_tensor(is, "W", 2);
        l.b = detail::read_tensor(is, "b", 1);
    }

    is >> key >> n;
    if (key != "sliced") throw std::runtime_error("model load: expected sliced");
    if (n > 0) {
        out.has_slices = true;
        out.num_classes = n;
        is >> out.slice_layer;
    }
    return out;
}

inline void save_model_file(const std::string& path, const MlpModel& m,
                            const SlicedClassifier* sliced = nullptr) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path);
    save_model(os, m, sliced);
}

inline LoadedModel load_model_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model file: " + path);
    return load_model(is);
}

} // namespace monotonet
