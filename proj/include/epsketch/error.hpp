#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace epsketch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or type-invariant violation on caller input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Corrupt or truncated bit stream / file.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(double residual, std::size_t iterations)
      : Error("slab projection did not converge: residual " +
              std::to_string(residual) + " after " +
              std::to_string(iterations) + " sweeps"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(std::size_t attempts, double best_eps)
      : Error("bipartite reduction failed after " + std::to_string(attempts) +
              " attempts (best achieved eps " + std::to_string(best_eps) + ")"),
        attempts_(attempts),
        best_eps_(best_eps) {}

  std::size_t attempts() const noexcept { return attempts_; }
  double best_eps() const noexcept { return best_eps_; }

 private:
  std::size_t attempts_;
  double best_eps_;
};

class PatienceExhausted : public Error {
 public:
  PatienceExhausted(std::size_t achieved, std::size_t target)
      : Error("separated net stalled at " + std::to_string(achieved) + " of " +
              std::to_string(target) + " points"),
        achieved_(achieved),
        target_(target) {}

  std::size_t achieved() const noexcept { return achieved_; }
  std::size_t target() const noexcept { return target_; }

 private:
  std::size_t achieved_;
  std::size_t target_;
};

}  // namespace epsketch
