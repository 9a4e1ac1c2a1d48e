//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "skylift/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace skylift::ad {

namespace {

std::string shape_str(const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

[[noreturn]] void shape_error(Op op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    std::ostringstream os;
    os << "shape mismatch in " << op_name(op) << ": " << shape_str(a) << " vs " << shape_str(b);
    throw std::invalid_argument(os.str());
}

bool broadcastable(const Eigen::MatrixXd& full, const Eigen::MatrixXd& part) {
    if (part.rows() == full.rows() && part.cols() == full.cols()) return true;
    if (part.rows() == 1 && part.cols() == 1) return true;
    if (part.rows() == full.rows() && part.cols() == 1) return true;
    if (part.rows() == 1 && part.cols() == full.cols()) return true;
    return false;
}

Eigen::MatrixXd expand(const Eigen::MatrixXd& part, Eigen::Index rows, Eigen::Index cols) {
    if (part.rows() == rows && part.cols() == cols) return part;
    if (part.rows() == 1 && part.cols() == 1)
        return Eigen::MatrixXd::Constant(rows, cols, part(0, 0));
    if (part.cols() == 1) return part.replicate(1, cols);
    return part.replicate(rows, 1);
}

// Sums a full-shape gradient back down to the shape of a broadcast operand.
Eigen::MatrixXd reduce_to(const Eigen::MatrixXd& grad, Eigen::Index rows, Eigen::Index cols) {
    if (grad.rows() == rows && grad.cols() == cols) return grad;
    if (rows == 1 && cols == 1) return Eigen::MatrixXd::Constant(1, 1, grad.sum());
    if (cols == 1) return grad.rowwise().sum();
    return grad.colwise().sum();
}

// Picks the output shape of a broadcasting elementwise op, or throws.
void elementwise_shapes(Op op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        Eigen::Index& rows, Eigen::Index& cols) {
    const bool a_bigger = a.size() >= b.size();
    const Eigen::MatrixXd& full = a_bigger ? a : b;
    const Eigen::MatrixXd& part = a_bigger ? b : a;
    if (!broadcastable(full, part)) shape_error(op, a, b);
    rows = full.rows();
    cols = full.cols();
}

Eigen::MatrixXd forward_elementwise(Op op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::Index rows = 0, cols = 0;
    elementwise_shapes(op, a, b, rows, cols);
    const Eigen::MatrixXd ea = expand(a, rows, cols);
    const Eigen::MatrixXd eb = expand(b, rows, cols);
    switch (op) {
        case Op::kAdd: return ea + eb;
        case Op::kMul: return ea.cwiseProduct(eb);
        case Op::kDiv: return ea.cwiseQuotient(eb);
        default: throw std::logic_error("forward_elementwise: bad op");
    }
}

void check_flat_indices(Op op, std::span<const int> idx, Eigen::Index rows, Eigen::Index cols) {
    const long n = static_cast<long>(rows) * static_cast<long>(cols);
    for (int i : idx) {
        if (i < 0 || i >= n) {
            std::ostringstream os;
            os << op_name(op) << ": flat index " << i << " out of range for " << rows << "x"
               << cols;
            throw std::invalid_argument(os.str());
        }
    }
}

double flat_get(const Eigen::MatrixXd& m, int flat) {
    return m(flat / m.cols(), flat % m.cols());
}

void flat_add(Eigen::MatrixXd& m, int flat, double v) {
    m(flat / m.cols(), flat % m.cols()) += v;
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::kLeaf: return "leaf";
        case Op::kAdd: return "add";
        case Op::kMul: return "mul";
        case Op::kDiv: return "div";
        case Op::kMatMul: return "matmul";
        case Op::kRowSum: return "row-sum";
        case Op::kColSum: return "col-sum";
        case Op::kExp: return "exp";
        case Op::kLog: return "log";
        case Op::kRelu: return "relu";
        case Op::kClip: return "clip";
        case Op::kGather: return "gather";
        case Op::kScatter: return "scatter";
    }
    return "?";
}

// --- Value -------------------------------------------------------------------

Value Value::constant(double scalar) {
    return constant(Eigen::MatrixXd::Constant(1, 1, scalar));
}

Value Value::constant(Eigen::MatrixXd m) {
    Value v;
    v.constant_ = std::make_shared<const Eigen::MatrixXd>(std::move(m));
    return v;
}

const Eigen::MatrixXd& Value::matrix() const {
    if (constant_) return *constant_;
    if (!tape_) throw std::logic_error("use of empty ad::Value");
    return tape_->node_value(node_);
}

double Value::scalar() const {
    const Eigen::MatrixXd& m = matrix();
    if (m.rows() != 1 || m.cols() != 1)
        throw std::invalid_argument("scalar() on a " + shape_str(m) + " value");
    return m(0, 0);
}

// --- Tape --------------------------------------------------------------------

const Eigen::MatrixXd& Tape::operand_value(const Operand& o) const {
    return o.node >= 0 ? node_value(o.node) : *o.constant;
}

Value Tape::push(Node&& node) {
    nodes_.push_back(std::move(node));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::variable(Eigen::MatrixXd v) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(v);
    return push(std::move(n));
}

Value Tape::variable(double v) { return variable(Eigen::MatrixXd::Constant(1, 1, v)); }

void Tape::reset() {
    nodes_.clear();
    last_backward_visits_ = 0;
}

// Central recorder shared by every op builder. Exactly one of the two
// operand slots is used for unary ops. Folds to a constant when no operand
// carries a tape.
Value record_op(Op op, const Value* a, const Value* b, double lo, double hi,
                std::span<const int> indices, Eigen::Index rows, Eigen::Index cols) {
    if (!a || !a->valid() || (b && !b->valid()))
        throw std::invalid_argument(std::string(op_name(op)) + ": empty operand");

    Tape* tape = a->tape();
    if (b && b->tape()) {
        if (tape && tape != b->tape())
            throw std::invalid_argument(std::string(op_name(op)) +
                                        ": operands recorded on different tapes");
        tape = b->tape();
    }

    const Eigen::MatrixXd& av = a->matrix();

    // Forward value.
    Eigen::MatrixXd out;
    switch (op) {
        case Op::kAdd:
        case Op::kMul:
        case Op::kDiv:
            out = forward_elementwise(op, av, b->matrix());
            break;
        case Op::kMatMul: {
            const Eigen::MatrixXd& bv = b->matrix();
            if (av.cols() != bv.rows()) shape_error(op, av, bv);
            out = av * bv;
            break;
        }
        case Op::kRowSum:
            out = av.rowwise().sum();
            break;
        case Op::kColSum:
            out = av.colwise().sum();
            break;
        case Op::kExp:
            out = av.array().exp();
            break;
        case Op::kLog:
            out = av.array().log();
            break;
        case Op::kRelu:
            out = av.cwiseMax(0.0);
            break;
        case Op::kClip:
            if (lo > hi) {
                std::ostringstream os;
                os << "clip: lo " << lo << " > hi " << hi;
                throw std::invalid_argument(os.str());
            }
            out = av.cwiseMax(lo).cwiseMin(hi);
            break;
        case Op::kGather: {
            check_flat_indices(op, indices, av.rows(), av.cols());
            out.resize(static_cast<Eigen::Index>(indices.size()), 1);
            for (std::size_t i = 0; i < indices.size(); ++i)
                out(static_cast<Eigen::Index>(i), 0) = flat_get(av, indices[i]);
            break;
        }
        case Op::kScatter: {
            if ((av.cols() != 1 && av.rows() != 1) ||
                av.size() != static_cast<Eigen::Index>(indices.size())) {
                std::ostringstream os;
                os << "scatter: expected a vector of length " << indices.size() << ", got "
                   << shape_str(av);
                throw std::invalid_argument(os.str());
            }
            check_flat_indices(op, indices, rows, cols);
            out = Eigen::MatrixXd::Zero(rows, cols);
            for (std::size_t i = 0; i < indices.size(); ++i)
                flat_add(out, indices[i], av(static_cast<Eigen::Index>(i % av.rows()),
                                             static_cast<Eigen::Index>(i / av.rows())));
            break;
        }
        case Op::kLeaf:
            throw std::logic_error("record_op: leaf is not recordable");
    }

    if (!tape) return Value::constant(std::move(out));

    Tape::Node node;
    node.op = op;
    node.value = std::move(out);
    node.lo = lo;
    node.hi = hi;
    node.indices.assign(indices.begin(), indices.end());
    node.a.node = a->node();
    if (a->is_constant()) node.a.constant = std::make_shared<const Eigen::MatrixXd>(av);
    if (b) {
        node.b.node = b->node();
        if (b->is_constant()) node.b.constant = std::make_shared<const Eigen::MatrixXd>(b->matrix());
    }
    return tape->push(std::move(node));
}

Value Tape::record(Op op, std::span<const Value> operands) {
    switch (op) {
        case Op::kAdd:
        case Op::kMul:
        case Op::kDiv:
        case Op::kMatMul:
            if (operands.size() != 2)
                throw std::invalid_argument(std::string(op_name(op)) + ": expects 2 operands");
            return record_op(op, &operands[0], &operands[1], 0, 0, {}, 0, 0);
        case Op::kRowSum:
        case Op::kColSum:
        case Op::kExp:
        case Op::kLog:
        case Op::kRelu:
            if (operands.size() != 1)
                throw std::invalid_argument(std::string(op_name(op)) + ": expects 1 operand");
            return record_op(op, &operands[0], nullptr, 0, 0, {}, 0, 0);
        default:
            throw std::invalid_argument(std::string(op_name(op)) +
                                        ": requires its dedicated builder");
    }
}

std::vector<Eigen::MatrixXd> Tape::gradient(const Value& output, std::span<const Value> wrt) {
    const Eigen::MatrixXd& ov = output.matrix();
    if (ov.rows() != 1 || ov.cols() != 1)
        throw std::invalid_argument("gradient: output must be scalar, got " + shape_str(ov));

    for (const Value& w : wrt) {
        if (w.is_constant() || w.tape() != this)
            throw std::invalid_argument("gradient: wrt value is not recorded on this tape");
    }

    // A constant output depends on nothing: exact zeros.
    std::vector<Eigen::MatrixXd> result;
    result.reserve(wrt.size());
    if (output.is_constant()) {
        for (const Value& w : wrt)
            result.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        last_backward_visits_ = 0;
        return result;
    }
    if (output.tape() != this)
        throw std::invalid_argument("gradient: output is not recorded on this tape");

    const int out_node = output.node();
    std::vector<Eigen::MatrixXd> adjoint(static_cast<std::size_t>(out_node) + 1);
    adjoint[static_cast<std::size_t>(out_node)] = Eigen::MatrixXd::Ones(1, 1);

    auto accumulate = [&](const Operand& o, const Eigen::MatrixXd& g) {
        if (o.node < 0) return;  // constants receive no gradient
        Eigen::MatrixXd& slot = adjoint[static_cast<std::size_t>(o.node)];
        if (slot.size() == 0)
            slot = g;
        else
            slot += g;
    };

    std::size_t visits = 0;
    for (int i = out_node; i >= 0; --i) {
        Eigen::MatrixXd& g = adjoint[static_cast<std::size_t>(i)];
        if (g.size() == 0) continue;  // node does not feed the output
        ++visits;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        switch (n.op) {
            case Op::kLeaf:
                break;
            case Op::kAdd: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd& bv = operand_value(n.b);
                accumulate(n.a, reduce_to(g, av.rows(), av.cols()));
                accumulate(n.b, reduce_to(g, bv.rows(), bv.cols()));
                break;
            }
            case Op::kMul: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd& bv = operand_value(n.b);
                const Eigen::MatrixXd ea = expand(av, g.rows(), g.cols());
                const Eigen::MatrixXd eb = expand(bv, g.rows(), g.cols());
                accumulate(n.a, reduce_to(g.cwiseProduct(eb), av.rows(), av.cols()));
                accumulate(n.b, reduce_to(g.cwiseProduct(ea), bv.rows(), bv.cols()));
                break;
            }
            case Op::kDiv: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd& bv = operand_value(n.b);
                const Eigen::MatrixXd ea = expand(av, g.rows(), g.cols());
                const Eigen::MatrixXd eb = expand(bv, g.rows(), g.cols());
                accumulate(n.a, reduce_to(g.cwiseQuotient(eb), av.rows(), av.cols()));
                accumulate(n.b, reduce_to(
                                    (-g.cwiseProduct(ea).cwiseQuotient(eb.cwiseProduct(eb))).eval(),
                                    bv.rows(), bv.cols()));
                break;
            }
            case Op::kMatMul: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd& bv = operand_value(n.b);
                accumulate(n.a, g * bv.transpose());
                accumulate(n.b, av.transpose() * g);
                break;
            }
            case Op::kRowSum: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                accumulate(n.a, g.replicate(1, av.cols()));
                break;
            }
            case Op::kColSum: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                accumulate(n.a, g.replicate(av.rows(), 1));
                break;
            }
            case Op::kExp:
                accumulate(n.a, g.cwiseProduct(n.value));
                break;
            case Op::kLog:
                accumulate(n.a, g.cwiseQuotient(operand_value(n.a)));
                break;
            case Op::kRelu: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd active = (av.array() > 0.0).cast<double>();
                accumulate(n.a, g.cwiseProduct(active));
                break;
            }
            case Op::kClip: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                const Eigen::MatrixXd inside =
                    (av.array() > n.lo && av.array() < n.hi).cast<double>();
                accumulate(n.a, g.cwiseProduct(inside));
                break;
            }
            case Op::kGather: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(av.rows(), av.cols());
                for (std::size_t k = 0; k < n.indices.size(); ++k)
                    flat_add(ga, n.indices[k], g(static_cast<Eigen::Index>(k), 0));
                accumulate(n.a, ga);
                break;
            }
            case Op::kScatter: {
                const Eigen::MatrixXd& av = operand_value(n.a);
                Eigen::MatrixXd ga(av.rows(), av.cols());
                for (std::size_t k = 0; k < n.indices.size(); ++k)
                    ga(static_cast<Eigen::Index>(k % av.rows()),
                       static_cast<Eigen::Index>(k / av.rows())) = flat_get(g, n.indices[k]);
                accumulate(n.a, ga);
                break;
            }
        }
    }
    last_backward_visits_ = visits;

    for (const Value& w : wrt) {
        const std::size_t idx = static_cast<std::size_t>(w.node());
        if (idx < adjoint.size() && adjoint[idx].size() != 0)
            result.push_back(adjoint[idx]);
        else
            result.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    return result;
}

Eigen::MatrixXd Tape::gradient(const Value& output, const Value& wrt) {
    return gradient(output, std::span<const Value>(&wrt, 1))[0];
}

// --- free builders -----------------------------------------------------------

Value add(const Value& a, const Value& b) { return record_op(Op::kAdd, &a, &b, 0, 0, {}, 0, 0); }
Value mul(const Value& a, const Value& b) { return record_op(Op::kMul, &a, &b, 0, 0, {}, 0, 0); }
Value div(const Value& a, const Value& b) { return record_op(Op::kDiv, &a, &b, 0, 0, {}, 0, 0); }
Value matmul(const Value& a, const Value& b) {
    return record_op(Op::kMatMul, &a, &b, 0, 0, {}, 0, 0);
}
Value row_sum(const Value& a) { return record_op(Op::kRowSum, &a, nullptr, 0, 0, {}, 0, 0); }
Value col_sum(const Value& a) { return record_op(Op::kColSum, &a, nullptr, 0, 0, {}, 0, 0); }
Value exp(const Value& a) { return record_op(Op::kExp, &a, nullptr, 0, 0, {}, 0, 0); }
Value log(const Value& a) { return record_op(Op::kLog, &a, nullptr, 0, 0, {}, 0, 0); }
Value relu(const Value& a) { return record_op(Op::kRelu, &a, nullptr, 0, 0, {}, 0, 0); }

Value clip(const Value& a, double lo, double hi) {
    return record_op(Op::kClip, &a, nullptr, lo, hi, {}, 0, 0);
}

Value gather(const Value& a, std::span<const int> flat_indices) {
    return record_op(Op::kGather, &a, nullptr, 0, 0, flat_indices, 0, 0);
}

Value scatter(const Value& a, std::span<const int> flat_indices, Eigen::Index rows,
              Eigen::Index cols) {
    return record_op(Op::kScatter, &a, nullptr, 0, 0, flat_indices, rows, cols);
}

Value sum(const Value& a) { return col_sum(row_sum(a)); }

}  // namespace skylift::ad
