/*
 * Copyright 2026 The attriblab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attriblab/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

// Valid output index range [lo, hi) along one axis such that
// out * stride + offset - padding lands inside [0, extent).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_range(std::size_t out_extent, std::size_t in_extent, std::size_t stride,
                 std::size_t offset, std::size_t padding) {
  // idx = o*stride + offset - padding
  std::size_t lo = 0;
  if (padding > offset) lo = (padding - offset + stride - 1) / stride;
  std::size_t hi = 0;
  if (in_extent + padding > offset) {
    hi = std::min(out_extent, (in_extent + padding - offset - 1) / stride + 1);
  }
  return {std::min(lo, hi), hi};
}

Tensor conv_forward(const LayerNode& node, const Tensor& in) {
  const Tensor& w = node.params[0].value;
  const Tensor& b = node.params[1].value;
  Tensor out(node.output_shape);
  const std::size_t oc_n = out.extent(0), oh = out.extent(1), ow = out.extent(2);
  const std::size_t ic_n = in.extent(0), ih = in.extent(1), iw = in.extent(2);
  const std::size_t k = w.extent(2), s = node.stride, p = node.padding;
  for (std::size_t oc = 0; oc < oc_n; ++oc) {
    double* o = &out.at(oc, 0, 0);
    std::fill(o, o + oh * ow, b[oc]);
    for (std::size_t ic = 0; ic < ic_n; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(oh, ih, s, ky, p);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Span xs = valid_range(ow, iw, s, kx, p);
          const double wv = w[((oc * ic_n + ic) * k + ky) * k + kx];
          for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
            const double* row = &in.at(ic, oy * s + ky - p, 0);
            double* orow = o + oy * ow;
            for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) {
              orow[ox] += wv * row[ox * s + kx - p];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv_backward(const LayerNode& node, const Tensor& in, const Tensor& g, Tensor& din,
                   Tensor* dw, Tensor* db) {
  const Tensor& w = node.params[0].value;
  const std::size_t oc_n = g.extent(0), oh = g.extent(1), ow = g.extent(2);
  const std::size_t ic_n = in.extent(0), ih = in.extent(1), iw = in.extent(2);
  const std::size_t k = w.extent(2), s = node.stride, p = node.padding;
  for (std::size_t oc = 0; oc < oc_n; ++oc) {
    const double* go = &g.at(oc, 0, 0);
    if (db) {
      double acc = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) acc += go[i];
      (*db)[oc] += acc;
    }
    for (std::size_t ic = 0; ic < ic_n; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span ys = valid_range(oh, ih, s, ky, p);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Span xs = valid_range(ow, iw, s, kx, p);
          const std::size_t widx = ((oc * ic_n + ic) * k + ky) * k + kx;
          const double wv = w[widx];
          double wacc = 0.0;
          for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
            const std::size_t iy = oy * s + ky - p;
            const double* row = &in.at(ic, iy, 0);
            double* drow = &din.at(ic, iy, 0);
            const double* grow = go + oy * ow;
            for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) {
              const std::size_t ix = ox * s + kx - p;
              drow[ix] += wv * grow[ox];
              wacc += grow[ox] * row[ix];
            }
          }
          if (dw) (*dw)[widx] += wacc;
        }
      }
    }
  }
}

Tensor dense_forward(const LayerNode& node, const Tensor& in) {
  const Tensor& w = node.params[0].value;
  const Tensor& b = node.params[1].value;
  const std::size_t out_n = w.extent(0), in_n = w.extent(1);
  Tensor out(node.output_shape);
  for (std::size_t o = 0; o < out_n; ++o) {
    double acc = b[o];
    for (std::size_t i = 0; i < in_n; ++i) acc += w[o * in_n + i] * in[i];
    out[o] = acc;
  }
  return out;
}

// Flat index of the first maximum in the 2x2 window feeding output (c, oy, ox).
std::size_t pool_argmax(const Tensor& in, std::size_t c, std::size_t oy, std::size_t ox) {
  std::size_t best = (c * in.extent(1) + 2 * oy) * in.extent(2) + 2 * ox;
  for (std::size_t dy = 0; dy < 2; ++dy) {
    for (std::size_t dx = 0; dx < 2; ++dx) {
      const std::size_t idx = (c * in.extent(1) + 2 * oy + dy) * in.extent(2) + 2 * ox + dx;
      if (in[idx] > in[best]) best = idx;
    }
  }
  return best;
}

Tensor forward_node(const LayerNode& node, const std::vector<Tensor>& outputs) {
  auto input = [&](std::size_t i) -> const Tensor& { return outputs[node.inputs[i]]; };
  switch (node.kind) {
    case LayerKind::Input:
      return outputs.front();
    case LayerKind::Conv2d:
      return conv_forward(node, input(0));
    case LayerKind::Dense:
      return dense_forward(node, input(0));
    case LayerKind::ReLU: {
      Tensor out = input(0);
      for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case LayerKind::MaxPool2x2: {
      const Tensor& in = input(0);
      Tensor out(node.output_shape);
      for (std::size_t c = 0; c < out.extent(0); ++c) {
        for (std::size_t y = 0; y < out.extent(1); ++y) {
          for (std::size_t x = 0; x < out.extent(2); ++x) out.at(c, y, x) = in[pool_argmax(in, c, y, x)];
        }
      }
      return out;
    }
    case LayerKind::GlobalAvgPool: {
      const Tensor& in = input(0);
      const std::size_t plane = in.extent(1) * in.extent(2);
      Tensor out(node.output_shape);
      for (std::size_t c = 0; c < out.extent(0); ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += in[c * plane + i];
        out[c] = acc / static_cast<double>(plane);
      }
      return out;
    }
    case LayerKind::Flatten:
      return input(0).reshaped(node.output_shape);
    case LayerKind::Add: {
      Tensor out = input(0);
      for (std::size_t i = 1; i < node.inputs.size(); ++i) out += input(i);
      return out;
    }
    case LayerKind::Concat: {
      std::vector<double> data;
      data.reserve(shape_size(node.output_shape));
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        const auto v = input(i).values();
        data.insert(data.end(), v.begin(), v.end());
      }
      return Tensor(node.output_shape, std::move(data));
    }
  }
  throw Error("invalid_graph", "unknown layer kind");
}

enum class Rule { Vanilla, Guided, Rescale };

struct Propagation {
  const ModelGraph& graph;
  const ActivationRecord& record;
  const ActivationRecord* reference = nullptr;  // Rescale only
  Rule rule = Rule::Vanilla;
  bool want_params = false;
};

void accumulate(std::vector<Tensor>& grads, std::size_t id, const Tensor& g) {
  if (grads[id].size() == 0) {
    grads[id] = g;
  } else {
    grads[id] += g;
  }
}

Gradients propagate(const Propagation& pass, const Tensor& output_grad) {
  const ModelGraph& graph = pass.graph;
  const auto& acts = pass.record.outputs;
  if (acts.size() != graph.size()) {
    throw Error("invalid_record", "activation record does not belong to this graph");
  }
  if (output_grad.shape() != graph.node(graph.output_id()).output_shape) {
    throw Error("shape_mismatch", "output gradient shape " + shape_string(output_grad.shape()) +
                                      " does not match logits " +
                                      shape_string(graph.node(graph.output_id()).output_shape));
  }

  Gradients result;
  if (pass.want_params) {
    result.params.resize(graph.size());
    for (std::size_t id = 0; id < graph.size(); ++id) {
      for (const auto& p : graph.node(id).params) result.params[id].emplace_back(p.value.shape());
    }
  }

  std::vector<Tensor> grads(graph.size());
  grads[graph.output_id()] = output_grad;

  for (std::size_t id = graph.size(); id-- > 1;) {
    if (grads[id].size() == 0) continue;
    const LayerNode& node = graph.node(id);
    const Tensor& g = grads[id];
    auto in_id = [&](std::size_t i) { return node.inputs[i]; };

    switch (node.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::Conv2d: {
        const Tensor& in = acts[in_id(0)];
        Tensor din(in.shape());
        Tensor* dw = pass.want_params ? &result.params[id][0] : nullptr;
        Tensor* db = pass.want_params ? &result.params[id][1] : nullptr;
        conv_backward(node, in, g, din, dw, db);
        accumulate(grads, in_id(0), din);
        break;
      }
      case LayerKind::Dense: {
        const Tensor& in = acts[in_id(0)];
        const Tensor& w = node.params[0].value;
        const std::size_t out_n = w.extent(0), in_n = w.extent(1);
        Tensor din(in.shape());
        for (std::size_t o = 0; o < out_n; ++o) {
          const double go = g[o];
          for (std::size_t i = 0; i < in_n; ++i) din[i] += w[o * in_n + i] * go;
        }
        if (pass.want_params) {
          Tensor& dw = result.params[id][0];
          Tensor& db = result.params[id][1];
          for (std::size_t o = 0; o < out_n; ++o) {
            db[o] += g[o];
            for (std::size_t i = 0; i < in_n; ++i) dw[o * in_n + i] += g[o] * in[i];
          }
        }
        accumulate(grads, in_id(0), din);
        break;
      }
      case LayerKind::ReLU: {
        const Tensor& pre = acts[in_id(0)];
        Tensor din(pre.shape());
        for (std::size_t i = 0; i < pre.size(); ++i) {
          const double local = pre[i] > 0.0 ? 1.0 : 0.0;
          switch (pass.rule) {
            case Rule::Vanilla:
              din[i] = g[i] * local;
              break;
            case Rule::Guided:
              din[i] = g[i] > 0.0 ? g[i] * local : 0.0;
              break;
            case Rule::Rescale: {
              const double ref = pass.reference->outputs[in_id(0)][i];
              const double delta_in = pre[i] - ref;
              if (std::abs(delta_in) < kRescaleEpsilon) {
                din[i] = g[i] * local;
              } else {
                const double delta_out = std::max(pre[i], 0.0) - std::max(ref, 0.0);
                din[i] = g[i] * (delta_out / delta_in);
              }
              break;
            }
          }
        }
        accumulate(grads, in_id(0), din);
        break;
      }
      case LayerKind::MaxPool2x2: {
        const Tensor& in = acts[in_id(0)];
        Tensor din(in.shape());
        for (std::size_t c = 0; c < g.extent(0); ++c) {
          for (std::size_t y = 0; y < g.extent(1); ++y) {
            for (std::size_t x = 0; x < g.extent(2); ++x) din[pool_argmax(in, c, y, x)] += g.at(c, y, x);
          }
        }
        accumulate(grads, in_id(0), din);
        break;
      }
      case LayerKind::GlobalAvgPool: {
        const Tensor& in = acts[in_id(0)];
        const std::size_t plane = in.extent(1) * in.extent(2);
        Tensor din(in.shape());
        for (std::size_t c = 0; c < in.extent(0); ++c) {
          const double share = g[c] / static_cast<double>(plane);
          for (std::size_t i = 0; i < plane; ++i) din[c * plane + i] = share;
        }
        accumulate(grads, in_id(0), din);
        break;
      }
      case LayerKind::Flatten:
        accumulate(grads, in_id(0), g.reshaped(acts[in_id(0)].shape()));
        break;
      case LayerKind::Add:
        for (std::size_t i = 0; i < node.inputs.size(); ++i) accumulate(grads, in_id(i), g);
        break;
      case LayerKind::Concat: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const Shape& s = acts[in_id(i)].shape();
          const std::size_t n = shape_size(s);
          const auto src = g.values().subspan(offset, n);
          accumulate(grads, in_id(i), Tensor(s, std::vector<double>(src.begin(), src.end())));
          offset += n;
        }
        break;
      }
    }
    grads[id] = Tensor();
  }

  result.input = grads[0].size() ? std::move(grads[0]) : Tensor(graph.input_shape());
  return result;
}

Tensor one_hot_seed(const ModelGraph& graph, std::size_t class_index) {
  if (class_index >= graph.num_outputs()) {
    throw Error("class_out_of_range", "class index " + std::to_string(class_index) +
                                          " out of range for " +
                                          std::to_string(graph.num_outputs()) + " outputs");
  }
  Tensor seed(graph.node(graph.output_id()).output_shape);
  seed[class_index] = 1.0;
  return seed;
}

}  // namespace

ActivationRecord forward(const ModelGraph& graph, const Tensor& x) {
  if (graph.size() == 0) throw Error("invalid_graph", "graph has no nodes");
  if (x.shape() != graph.input_shape()) {
    throw Error("shape_mismatch", "node 0 'input' (Input): expected " +
                                      shape_string(graph.input_shape()) + ", got " +
                                      shape_string(x.shape()));
  }
  ActivationRecord record;
  record.outputs.reserve(graph.size());
  record.outputs.push_back(x);
  for (std::size_t id = 1; id < graph.size(); ++id) {
    record.outputs.push_back(forward_node(graph.node(id), record.outputs));
  }
  return record;
}

Tensor predict_logits(const ModelGraph& graph, const Tensor& x) {
  return std::move(forward(graph, x).outputs.back());
}

Tensor backward(const ModelGraph& graph, const ActivationRecord& record, std::size_t class_index,
                BackwardMode mode) {
  return backward(graph, record, one_hot_seed(graph, class_index), mode);
}

Tensor backward(const ModelGraph& graph, const ActivationRecord& record, const Tensor& output_grad,
                BackwardMode mode) {
  const Rule rule = mode.relu_rule == ReluRule::Guided ? Rule::Guided : Rule::Vanilla;
  return propagate({graph, record, nullptr, rule, false}, output_grad).input;
}

Gradients backward_with_parameters(const ModelGraph& graph, const ActivationRecord& record,
                                   const Tensor& output_grad) {
  return propagate({graph, record, nullptr, Rule::Vanilla, true}, output_grad);
}

Tensor PairedRecord::delta(std::size_t node) const {
  return actual.outputs.at(node) - reference.outputs.at(node);
}

PairedRecord forward_pair(const ModelGraph& graph, const Tensor& x, const Tensor& x_ref) {
  if (x.shape() != x_ref.shape()) {
    throw Error("shape_mismatch", "input " + shape_string(x.shape()) + " vs reference " +
                                      shape_string(x_ref.shape()));
  }
  return {forward(graph, x), forward(graph, x_ref)};
}

Tensor rescale_multipliers(const ModelGraph& graph, const PairedRecord& paired,
                           std::size_t class_index) {
  if (paired.reference.outputs.size() != graph.size()) {
    throw Error("invalid_record", "reference record does not belong to this graph");
  }
  return propagate({graph, paired.actual, &paired.reference, Rule::Rescale, false},
                   one_hot_seed(graph, class_index))
      .input;
}

}  // namespace attriblab
