#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "monotonet/tensor.hpp"

namespace monotonet {

// Primitive operations recorded on the tape.
enum class Op {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    MatMul,
    Transpose,
    MaxConst,
    Tanh,
    Exp,
    Log,
    Square,
    Scale,
    Shift,
    SumAll,
    MeanAll,
    SumAxis0,
    SumAxis1,
    BcastAxis0,
    BcastAxis1,
    BcastScalar,
    Softmax,
    Slice,
    Embed,
    Concat,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Constant: return "constant";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::MaxConst: return "max_const";
        case Op::Tanh: return "tanh";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Square: return "square";
        case Op::Scale: return "scale";
        case Op::Shift: return "shift";
        case Op::SumAll: return "sum_all";
        case Op::MeanAll: return "mean_all";
        case Op::SumAxis0: return "sum_axis0";
        case Op::SumAxis1: return "sum_axis1";
        case Op::BcastAxis0: return "bcast_axis0";
        case Op::BcastAxis1: return "bcast_axis1";
        case Op::BcastScalar: return "bcast_scalar";
        case Op::Softmax: return "softmax";
        case Op::Slice: return "slice";
        case Op::Embed: return "embed";
        case Op::Concat: return "concat";
    }
    return "?";
}

// One recorded primitive application: the op, its parents (tape indices,
// always smaller than the node's own index) and the cached forward value.
// `c` and `i0`/`i1` carry per-op payload (constants, slice bounds,
// broadcast extents).
struct TapeNode {
    Op op;
    std::vector<int> parents;
    Tensor value;
    double c = 0.0;
    int i0 = 0;
    int i1 = 0;
};

class Tape;

// Handle to a tape node. Cheap to copy; only valid for the lifetime of
// the owning tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
};

// Computation tape: a DAG of primitive applications in evaluation order.
// A backward pass appends ordinary nodes to the same tape, so the results
// of gradient() can be differentiated again (reverse-over-reverse).
// A tape is confined to one execution context; distinct tapes are
// independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    int size() const { return static_cast<int>(nodes_.size()); }

    const TapeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    Var push(TapeNode n) {
        if (!n.value.all_finite())
            throw std::runtime_error(std::string("tape: non-finite result in ") + op_name(n.op));
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

private:
    std::vector<TapeNode> nodes_;
};

inline const Tensor& Var::value() const {
    if (!valid()) throw std::invalid_argument("Var: invalid handle");
    return tape->value(id);
}

namespace detail {
inline Tape& same_tape(Var a, Var b) {
    if (!a.valid() || !b.valid() || a.tape != b.tape)
        throw std::invalid_argument("tape: operands must live on the same tape");
    return *a.tape;
}
} // namespace detail

// ---- node builders -------------------------------------------------------

inline Var leaf(Tape& t, Tensor v) { return t.push({Op::Leaf, {}, std::move(v)}); }
inline Var constant(Tape& t, Tensor v) { return t.push({Op::Constant, {}, std::move(v)}); }

inline Var add(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push({Op::Add, {a.id, b.id}, kernel::add(a.value(), b.value())});
}

inline Var sub(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push({Op::Sub, {a.id, b.id}, kernel::sub(a.value(), b.value())});
}

inline Var mul(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push({Op::Mul, {a.id, b.id}, kernel::mul(a.value(), b.value())});
}

inline Var div(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push({Op::Div, {a.id, b.id}, kernel::div(a.value(), b.value())});
}

inline Var neg(Var a) { return a.tape->push({Op::Neg, {a.id}, kernel::neg(a.value())}); }

inline Var matmul(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push({Op::MatMul, {a.id, b.id}, kernel::matmul(a.value(), b.value())});
}

inline Var transpose(Var a) {
    return a.tape->push({Op::Transpose, {a.id}, kernel::transpose(a.value())});
}

inline Var max_const(Var a, double c) {
    TapeNode n{Op::MaxConst, {a.id}, kernel::max_const(a.value(), c)};
    n.c = c;
    return a.tape->push(std::move(n));
}

// subgradient at the kink is 0, consistent with the squared-hinge use
inline Var relu(Var a) { return max_const(a, 0.0); }

inline Var tanh(Var a) { return a.tape->push({Op::Tanh, {a.id}, kernel::tanh(a.value())}); }
inline Var exp(Var a) { return a.tape->push({Op::Exp, {a.id}, kernel::exp(a.value())}); }
inline Var log(Var a) { return a.tape->push({Op::Log, {a.id}, kernel::log(a.value())}); }
inline Var square(Var a) { return a.tape->push({Op::Square, {a.id}, kernel::square(a.value())}); }

inline Var scale(Var a, double c) {
    TapeNode n{Op::Scale, {a.id}, kernel::scale(a.value(), c)};
    n.c = c;
    return a.tape->push(std::move(n));
}

inline Var shift(Var a, double c) {
    TapeNode n{Op::Shift, {a.id}, kernel::shift(a.value(), c)};
    n.c = c;
    return a.tape->push(std::move(n));
}

inline Var sum_all(Var a) { return a.tape->push({Op::SumAll, {a.id}, kernel::sum_all(a.value())}); }
inline Var mean_all(Var a) { return a.tape->push({Op::MeanAll, {a.id}, kernel::mean_all(a.value())}); }
inline Var sum_axis0(Var a) { return a.tape->push({Op::SumAxis0, {a.id}, kernel::sum_axis0(a.value())}); }
inline Var sum_axis1(Var a) { return a.tape->push({Op::SumAxis1, {a.id}, kernel::sum_axis1(a.value())}); }

inline Var bcast_axis0(Var a, std::size_t rows) {
    TapeNode n{Op::BcastAxis0, {a.id}, kernel::bcast_axis0(a.value(), rows)};
    n.i0 = static_cast<int>(rows);
    return a.tape->push(std::move(n));
}

inline Var bcast_axis1(Var a, std::size_t cols) {
    TapeNode n{Op::BcastAxis1, {a.id}, kernel::bcast_axis1(a.value(), cols)};
    n.i0 = static_cast<int>(cols);
    return a.tape->push(std::move(n));
}

inline Var bcast_scalar(Var a, const Shape& target) {
    return a.tape->push({Op::BcastScalar, {a.id}, kernel::bcast_scalar(a.value(), target)});
}

inline Var softmax(Var a) { return a.tape->push({Op::Softmax, {a.id}, kernel::softmax(a.value())}); }

inline Var slice(Var a, std::size_t start, std::size_t len) {
    TapeNode n{Op::Slice, {a.id}, kernel::slice_last(a.value(), start, len)};
    n.i0 = static_cast<int>(start);
    n.i1 = static_cast<int>(len);
    return a.tape->push(std::move(n));
}

inline Var embed(Var a, std::size_t start, std::size_t out_width) {
    TapeNode n{Op::Embed, {a.id}, kernel::embed_last(a.value(), start, out_width)};
    n.i0 = static_cast<int>(start);
    n.i1 = static_cast<int>(out_width);
    return a.tape->push(std::move(n));
}

inline Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    Tape& t = *parts[0].tape;
    std::vector<const Tensor*> vals;
    std::vector<int> ids;
    vals.reserve(parts.size());
    for (Var p : parts) {
        if (p.tape != &t) throw std::invalid_argument("concat: operands must live on the same tape");
        vals.push_back(&p.value());
        ids.push_back(p.id);
    }
    TapeNode n{Op::Concat, std::move(ids), kernel::concat_last(vals)};
    return t.push(std::move(n));
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return shift(a, c); }
inline Var operator+(double c, Var a) { return shift(a, c); }
inline Var operator-(Var a, double c) { return shift(a, -c); }

// ---- reverse pass ---------------------------------------------------------

namespace detail {

// Emits the vector-Jacobian product of node `id` w.r.t. parent slot `slot`
// given the node's adjoint `g`. Every emitted node is a primitive with its
// own VJP rule, which is what makes gradients differentiable in turn.
inline Var vjp(Tape& t, int id, std::size_t slot, Var g) {
    const TapeNode& n = t.node(id);
    const Var self{&t, id};
    const auto parent = [&](std::size_t s) { return Var{&t, n.parents[s]}; };

    switch (n.op) {
        case Op::Add:
            return g;
        case Op::Sub:
            return slot == 0 ? g : neg(g);
        case Op::Mul:
            return slot == 0 ? mul(g, parent(1)) : mul(g, parent(0));
        case Op::Div:
            // d(a/b)/da = 1/b ; d(a/b)/db = -(a/b)/b
            return slot == 0 ? div(g, parent(1)) : neg(div(mul(g, self), parent(1)));
        case Op::Neg:
            return neg(g);
        case Op::MatMul:
            return slot == 0 ? matmul(g, transpose(parent(1))) : matmul(transpose(parent(0)), g);
        case Op::Transpose:
            return transpose(g);
        case Op::MaxConst: {
            // piecewise-constant gate; entering as a constant keeps higher
            // derivatives correct almost everywhere
            const Tensor& x = parent(0).value();
            Tensor mask(x.shape());
            for (std::size_t i = 0; i < x.size(); ++i) mask[i] = x[i] > n.c ? 1.0 : 0.0;
            return mul(g, constant(t, std::move(mask)));
        }
        case Op::Tanh:
            return mul(g, shift(neg(square(self)), 1.0));
        case Op::Exp:
            return mul(g, self);
        case Op::Log:
            return div(g, parent(0));
        case Op::Square:
            return mul(g, scale(parent(0), 2.0));
        case Op::Scale:
            return scale(g, n.c);
        case Op::Shift:
            return g;
        case Op::SumAll:
            return bcast_scalar(g, parent(0).value().shape());
        case Op::MeanAll:
            return scale(bcast_scalar(g, parent(0).value().shape()),
                         1.0 / static_cast<double>(parent(0).value().size()));
        case Op::SumAxis0:
            return bcast_axis0(g, parent(0).value().rows());
        case Op::SumAxis1:
            return bcast_axis1(g, parent(0).value().cols());
        case Op::BcastAxis0:
            return sum_axis0(g);
        case Op::BcastAxis1:
            return sum_axis1(g);
        case Op::BcastScalar:
            return sum_all(g);
        case Op::Softmax: {
            // dx = s * (g - rowsum(g * s)), with the row sum broadcast back
            Var gs = mul(g, self);
            Var inner = self.value().rank() == 1
                            ? sub(g, bcast_scalar(sum_all(gs), self.value().shape()))
                            : sub(g, bcast_axis1(sum_axis1(gs), self.value().cols()));
            return mul(self, inner);
        }
        case Op::Slice: {
            const Tensor& p = parent(0).value();
            const std::size_t width = p.rank() == 1 ? p.length() : p.cols();
            return embed(g, static_cast<std::size_t>(n.i0), width);
        }
        case Op::Embed: {
            const Tensor& p = parent(0).value();
            const std::size_t len = p.rank() == 1 ? p.length() : p.cols();
            return slice(g, static_cast<std::size_t>(n.i0), len);
        }
        case Op::Concat: {
            std::size_t off = 0;
            for (std::size_t s = 0; s < slot; ++s) {
                const Tensor& p = parent(s).value();
                off += p.rank() == 1 ? p.length() : p.cols();
            }
            const Tensor& p = parent(slot).value();
            return slice(g, off, p.rank() == 1 ? p.length() : p.cols());
        }
        case Op::Leaf:
        case Op::Constant:
            break;
    }
    throw std::logic_error("vjp: unreachable");
}

} // namespace detail

// Reverse pass from a scalar node. Returns one adjoint per requested
// variable, in order; variables that the scalar does not depend on get a
// zero tensor of their shape. The returned handles are live tape nodes and
// may be differentiated again.
inline std::vector<Var> gradient(Var f, const std::vector<Var>& wrt) {
    if (!f.valid()) throw std::invalid_argument("gradient: invalid target");
    Tape& t = *f.tape;
    if (f.value().rank() != 0)
        throw std::invalid_argument("gradient: target must be scalar, got shape " + shape_str(f.value().shape()));
    for (Var w : wrt)
        if (!w.valid() || w.tape != &t || w.id >= t.size())
            throw std::invalid_argument("gradient: variable not on tape");

    const int root = f.id;
    std::vector<int> adj(static_cast<std::size_t>(root) + 1, -1);
    adj[static_cast<std::size_t>(root)] = constant(t, Tensor::scalar(1.0)).id;

    // Parents always precede children, and nodes appended during this pass
    // have indices above `root`, so one descending sweep settles every
    // adjoint below the target.
    for (int id = root; id >= 0; --id) {
        const int gid = adj[static_cast<std::size_t>(id)];
        if (gid < 0) continue;
        const Var g{&t, gid};
        const std::size_t nparents = t.node(id).parents.size();
        for (std::size_t s = 0; s < nparents; ++s) {
            const int p = t.node(id).parents[s];
            Var contrib = detail::vjp(t, id, s, g);
            int& slot = adj[static_cast<std::size_t>(p)];
            slot = slot < 0 ? contrib.id : add(Var{&t, slot}, contrib).id;
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (Var w : wrt) {
        if (w.id <= root && adj[static_cast<std::size_t>(w.id)] >= 0)
            out.push_back(Var{&t, adj[static_cast<std::size_t>(w.id)]});
        else
            out.push_back(constant(t, Tensor::zeros(w.value().shape())));
    }
    return out;
}

inline Var gradient(Var f, Var wrt) { return gradient(f, std::vector<Var>{wrt})[0]; }

} // namespace monotonet
