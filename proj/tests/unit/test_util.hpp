#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "nrgnn/rng.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn::testing {

// Scalar-valued function of a set of input tensors. Must be pure: called
// repeatedly with perturbed copies during finite differencing.
using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

inline bool close_rel(double a, double b, double tol, double floor = 1e-7) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < floor) return true;  // both effectively zero
  return std::abs(a - b) <= tol * scale;
}

// Central-difference gradient check of f against the tape's reverse sweep.
inline void gradcheck(const std::vector<Tensor>& inputs, const LossFn& f, double tol = 1e-4,
                      double h = 1e-6) {
  // Analytic gradients.
  Tape tape;
  std::vector<Tensor> watched;
  watched.reserve(inputs.size());
  for (const auto& x : inputs) watched.push_back(tape.watch(x.clone()));
  Tensor loss = f(watched);
  REQUIRE(loss.size() == 1);
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(watched.size());
  for (const auto& w : watched) grads.push_back(tape.grad(w));

  // Numeric gradients, one coordinate at a time.
  auto eval = [&](const std::vector<Tensor>& xs) { return f(xs).value(); };
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int64_t e = 0; e < inputs[i].size(); ++e) {
      std::vector<Tensor> plus, minus;
      for (const auto& x : inputs) {
        plus.push_back(x.clone());
        minus.push_back(x.clone());
      }
      plus[i].at(e) += h;
      minus[i].at(e) -= h;
      const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
      const double ad = grads[i].at(e);
      INFO("input ", i, " element ", e, ": analytic ", ad, " vs finite-diff ", fd);
      CHECK(close_rel(ad, fd, tol));
    }
  }
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
  return t;
}

}  // namespace nrgnn::testing
