// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/nn/op_kind.hpp"

#include <charconv>

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_spatial(const Shape& in, const char* op) {
  if (in.size() != 3) {
    throw ShapeError(std::string(op) + " expects a [C,H,W] input, got " + shape_str(in));
  }
}

void require_odd_kernel(std::size_t k, const char* op) {
  if (k == 0 || k % 2 == 0) {
    throw ShapeError(std::string(op) + " kernel must be odd, got " + std::to_string(k));
  }
}

std::size_t parse_uint(std::string_view s, std::string_view whole) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ArgumentError("bad operation name: " + std::string(whole));
  }
  return v;
}

// Parses "<k>x<k>" and returns k.
std::size_t parse_kernel(std::string_view s, std::string_view whole) {
  auto x = s.find('x');
  if (x == std::string_view::npos) throw ArgumentError("bad operation name: " + std::string(whole));
  std::size_t a = parse_uint(s.substr(0, x), whole);
  std::size_t b = parse_uint(s.substr(x + 1), whole);
  if (a != b) throw ArgumentError("only square kernels are supported: " + std::string(whole));
  return a;
}

}  // namespace

std::string op_name(const OpKind& op) {
  return std::visit(
      overloaded{
          [](const Identity&) -> std::string { return "identity"; },
          [](const Zero&) -> std::string { return "zero"; },
          [](const Dense&) -> std::string { return "dense"; },
          [](const Conv& c) {
            auto k = std::to_string(c.kernel);
            return "conv" + k + "x" + k + (c.relu ? "" : "_linear");
          },
          [](const DepthwiseSepConv& d) {
            auto k = std::to_string(d.kernel);
            return "dwsep" + k + "x" + k + "_e" + std::to_string(d.expansion);
          },
          [](const AvgPool& p) {
            auto k = std::to_string(p.kernel);
            return "avgpool" + k + "x" + k + (p.stride == 1 ? "" : "_s" + std::to_string(p.stride));
          },
      },
      op);
}

std::string op_describe(const OpKind& op) {
  return std::visit(
      overloaded{
          [&](const Dense& d) { return op_name(op) + "(out=" + std::to_string(d.out_features) + ")"; },
          [&](const Conv& c) { return op_name(op) + "(c=" + std::to_string(c.channels) + ")"; },
          [&](const DepthwiseSepConv& d) { return op_name(op) + "(c=" + std::to_string(d.channels) + ")"; },
          [&](const auto&) { return op_name(op); },
      },
      op);
}

OpKind parse_op(std::string_view name, std::size_t channels, std::size_t out_features) {
  if (name == "identity") return Identity{};
  if (name == "zero") return Zero{};
  if (name == "dense") return Dense{out_features};
  if (name.starts_with("conv")) {
    std::string_view rest = name.substr(4);
    bool relu = true;
    if (rest.ends_with("_linear")) {
      relu = false;
      rest.remove_suffix(7);
    }
    return Conv{parse_kernel(rest, name), channels, relu};
  }
  if (name.starts_with("dwsep")) {
    std::string_view rest = name.substr(5);
    auto e = rest.find("_e");
    if (e == std::string_view::npos) throw ArgumentError("bad operation name: " + std::string(name));
    std::size_t k = parse_kernel(rest.substr(0, e), name);
    std::size_t expansion = parse_uint(rest.substr(e + 2), name);
    return DepthwiseSepConv{k, channels, expansion};
  }
  if (name.starts_with("avgpool")) {
    std::string_view rest = name.substr(7);
    std::size_t stride = 1;
    if (auto s = rest.find("_s"); s != std::string_view::npos) {
      stride = parse_uint(rest.substr(s + 2), name);
      rest = rest.substr(0, s);
    }
    return AvgPool{parse_kernel(rest, name), stride};
  }
  throw ArgumentError("unknown operation: " + std::string(name));
}

Shape op_output_shape(const OpKind& op, const Shape& in) {
  if (in.empty()) throw ShapeError("operation input must have at least one dimension");
  return std::visit(
      overloaded{
          [&](const Identity&) { return in; },
          [&](const Zero&) { return in; },
          [&](const Dense& d) {
            if (d.out_features == 0) throw ShapeError("dense out_features must be positive");
            return Shape{d.out_features};
          },
          [&](const Conv& c) {
            require_spatial(in, "conv");
            require_odd_kernel(c.kernel, "conv");
            if (c.channels == 0) throw ShapeError("conv channels must be positive");
            return Shape{c.channels, in[1], in[2]};
          },
          [&](const DepthwiseSepConv& d) {
            require_spatial(in, "dwsep");
            require_odd_kernel(d.kernel, "dwsep");
            if (d.channels == 0 || d.expansion == 0) {
              throw ShapeError("dwsep channels and expansion must be positive");
            }
            return Shape{d.channels, in[1], in[2]};
          },
          [&](const AvgPool& p) {
            require_spatial(in, "avgpool");
            if (p.kernel == 0 || p.stride == 0) throw ShapeError("avgpool kernel/stride must be positive");
            if (p.stride == 1) {
              require_odd_kernel(p.kernel, "avgpool");
              return in;
            }
            if (in[1] < p.kernel || in[2] < p.kernel) {
              throw ShapeError("avgpool kernel exceeds input " + shape_str(in));
            }
            return Shape{in[0], (in[1] - p.kernel) / p.stride + 1, (in[2] - p.kernel) / p.stride + 1};
          },
      },
      op);
}

std::vector<Shape> op_param_shapes(const OpKind& op, const Shape& in) {
  op_output_shape(op, in);  // validates the contract
  return std::visit(
      overloaded{
          [&](const Dense& d) {
            return std::vector<Shape>{{d.out_features, shape_numel(in)}, {d.out_features}};
          },
          [&](const Conv& c) {
            return std::vector<Shape>{{c.channels, in[0], c.kernel, c.kernel}, {c.channels}};
          },
          [&](const DepthwiseSepConv& d) {
            const std::size_t cin = in[0];
            const std::size_t mid = cin * d.expansion;
            if (d.expansion == 1) {
              return std::vector<Shape>{{cin, d.kernel, d.kernel}, {cin}, {d.channels, cin}, {d.channels}};
            }
            return std::vector<Shape>{{mid, cin}, {mid}, {mid, d.kernel, d.kernel}, {mid}, {d.channels, mid}, {d.channels}};
          },
          [&](const auto&) { return std::vector<Shape>{}; },
      },
      op);
}

std::size_t op_param_count(const OpKind& op, const Shape& in) {
  std::size_t n = 0;
  for (const auto& s : op_param_shapes(op, in)) n += shape_numel(s);
  return n;
}

std::uint64_t op_macs(const OpKind& op, const Shape& in) {
  const Shape out = op_output_shape(op, in);
  return std::visit(
      overloaded{
          [&](const Dense& d) -> std::uint64_t { return shape_numel(in) * d.out_features; },
          [&](const Conv& c) -> std::uint64_t {
            return c.kernel * c.kernel * in[0] * c.channels * in[1] * in[2];
          },
          [&](const DepthwiseSepConv& d) -> std::uint64_t {
            const std::uint64_t hw = in[1] * in[2];
            const std::uint64_t cin = in[0];
            const std::uint64_t mid = cin * d.expansion;
            std::uint64_t macs = d.kernel * d.kernel * mid * hw + mid * d.channels * hw;
            if (d.expansion > 1) macs += cin * mid * hw;
            return macs;
          },
          [&](const AvgPool& p) -> std::uint64_t { return p.kernel * p.kernel * shape_numel(out); },
          [&](const auto&) -> std::uint64_t { return 0; },
      },
      op);
}

}  // namespace fdnas
