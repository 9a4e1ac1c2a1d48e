//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace skylift::ad {

/// Operation kinds recordable on a Tape. Elementwise binary ops support
/// limited broadcasting: equal shapes, a 1x1 scalar against anything, a
/// column (m x 1) against (m x n), or a row (1 x n) against (m x n).
enum class Op : std::uint8_t {
    kLeaf,     // differentiable input
    kAdd,
    kMul,      // elementwise
    kDiv,      // elementwise
    kMatMul,
    kRowSum,   // (m x n) -> (m x 1)
    kColSum,   // (m x n) -> (1 x n)
    kExp,
    kLog,
    kRelu,     // max(0, x); subgradient 0 at x = 0
    kClip,     // clip-through: identity gradient strictly inside (lo, hi), 0 outside
    kGather,   // pick entries by row-major flat index -> (k x 1)
    kScatter,  // place a (k x 1) vector into a zero (rows x cols) matrix, accumulating
};

const char* op_name(Op op);

class Tape;

/// A value in a differentiable computation: either a constant (no tape
/// node, receives no gradient) or a handle to a node on a Tape. Copies are
/// cheap; the underlying matrix is shared and immutable.
class Value {
public:
    Value() = default;

    static Value constant(double scalar);
    static Value constant(Eigen::MatrixXd m);

    bool valid() const { return constant_ != nullptr || tape_ != nullptr; }
    bool is_constant() const { return tape_ == nullptr; }

    const Eigen::MatrixXd& matrix() const;
    /// Requires a 1x1 value.
    double scalar() const;
    Eigen::Index rows() const { return matrix().rows(); }
    Eigen::Index cols() const { return matrix().cols(); }

    Tape* tape() const { return tape_; }
    int node() const { return node_; }

private:
    friend class Tape;
    Value(Tape* tape, int node) : tape_(tape), node_(node) {}

    std::shared_ptr<const Eigen::MatrixXd> constant_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

/// Append-only record of operations. Nodes are topologically ordered by
/// construction (operands always precede their consumers), so one reverse
/// sweep visits each node at most once. Single-writer: concurrent
/// computations must each own a private tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a differentiable input.
    Value variable(Eigen::MatrixXd v);
    Value variable(double v);

    std::size_t size() const { return nodes_.size(); }

    /// Drops all nodes but keeps allocated capacity; invalidates Values.
    void reset();

    /// Reverse sweep from a scalar output. Returns one gradient per wrt
    /// entry, each shaped like its value. A wrt value must be recorded on
    /// this tape; a wrt the output does not depend on gets exact zeros.
    std::vector<Eigen::MatrixXd> gradient(const Value& output, std::span<const Value> wrt);
    Eigen::MatrixXd gradient(const Value& output, const Value& wrt);

    /// Number of nodes processed by the most recent reverse sweep; used to
    /// assert the sweep is linear in tape length.
    std::size_t last_backward_visits() const { return last_backward_visits_; }

    /// Generic entry point for payload-free ops (add/mul/div/matmul/
    /// row-sum/col-sum/exp/log/relu). If every operand is a constant the
    /// result is computed eagerly and no node is recorded.
    Value record(Op op, std::span<const Value> operands);

private:
    struct Operand {
        int node = -1;                                      // >= 0: node id
        std::shared_ptr<const Eigen::MatrixXd> constant;    // set when node < 0
    };

    struct Node {
        Op op;
        Eigen::MatrixXd value;
        Operand a, b;
        double lo = 0.0, hi = 0.0;       // kClip
        std::vector<int> indices;        // kGather / kScatter
    };

    const Eigen::MatrixXd& operand_value(const Operand& o) const;
    const Eigen::MatrixXd& node_value(int node) const {
        return nodes_[static_cast<std::size_t>(node)].value;
    }
    Value push(Node&& node);

    std::vector<Node> nodes_;
    std::size_t last_backward_visits_ = 0;

    friend class Value;
    friend Value record_op(Op op, const Value* a, const Value* b, double lo, double hi,
                           std::span<const int> indices, Eigen::Index rows, Eigen::Index cols);
};

// --- op builders -----------------------------------------------------------
// All fold to constants when every operand is constant. Shape violations
// throw std::invalid_argument naming the op and the offending shapes.

Value add(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value matmul(const Value& a, const Value& b);
Value row_sum(const Value& a);
Value col_sum(const Value& a);
Value exp(const Value& a);
Value log(const Value& a);
Value relu(const Value& a);

/// Forward min(hi, max(lo, x)); gradient passes unchanged strictly inside
/// (lo, hi) and is zero at and beyond either bound. Requires lo <= hi.
Value clip(const Value& a, double lo, double hi);

/// out[i] = a.flat[idx[i]] with row-major flat indexing; result is (k x 1).
Value gather(const Value& a, std::span<const int> flat_indices);

/// Zero (rows x cols) matrix with a[i] accumulated at flat index idx[i].
/// `a` must be a column or row vector of the same length as the index list.
Value scatter(const Value& a, std::span<const int> flat_indices, Eigen::Index rows,
              Eigen::Index cols);

/// Total reduction to 1x1, composed as col_sum(row_sum(x)).
Value sum(const Value& a);

}  // namespace skylift::ad
