#pragma once

#include <stdexcept>
#include <string>

#include "lfm/types.hpp"

namespace lfm {

/// Base class for all recoverable estimation errors. `name()` is a stable
/// machine-readable identifier (used by the CLI for diagnostics and exit
/// codes); `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

struct OverlapTooSparse : Error {
  OverlapTooSparse(Index i, Index j, long count, long required)
      : Error("OverlapTooSparse",
              "units " + std::to_string(i) + " and " + std::to_string(j) +
                  " share only " + std::to_string(count) +
                  " observed periods (need >= " + std::to_string(required) + ")"),
        unit_i(i),
        unit_j(j) {}
  Index unit_i, unit_j;
};

struct NonFiniteValue : Error {
  NonFiniteValue(Index i, Index t)
      : Error("NonFiniteValue", "observed entry (" + std::to_string(i) + "," +
                                    std::to_string(t) + ") is not finite"),
        unit(i),
        period(t) {}
  Index unit, period;
};

struct DegenerateMask : Error {
  explicit DegenerateMask(const std::string& what) : Error("DegenerateMask", what) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error("DimensionMismatch", what) {}
};

struct RankTooLarge : Error {
  RankTooLarge(int rank, Index limit)
      : Error("RankTooLarge", "rank " + std::to_string(rank) +
                                  " exceeds min(N,T) = " + std::to_string(limit)) {}
};

struct EigenFailure : Error {
  explicit EigenFailure(const std::string& what) : Error("EigenFailure", what) {}
};

struct SpectrumDegenerate : Error {
  explicit SpectrumDegenerate(const std::string& what)
      : Error("SpectrumDegenerate", what) {}
};

struct PropensityUnderflow : Error {
  PropensityUnderflow(Index i, Index t, double p, double floor)
      : Error("PropensityUnderflow",
              "observation probability " + std::to_string(p) + " at (" +
                  std::to_string(i) + "," + std::to_string(t) + ") is below the floor " +
                  std::to_string(floor)) {}
};

struct CellTooSmall : Error {
  CellTooSmall(const std::string& level, long size, long floor)
      : Error("CellTooSmall", "covariate level " + level + " has " +
                                  std::to_string(size) + " units (need >= " +
                                  std::to_string(floor) + ")") {}
};

struct LogitSeparation : Error {
  explicit LogitSeparation(const std::string& what) : Error("LogitSeparation", what) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error("NoConvergence", what) {}
};

struct NoIdentifiablePeriods : Error {
  NoIdentifiablePeriods() : Error("NoIdentifiablePeriods", "no period has an identifiable factor regression") {}
};

struct PeriodUnidentified : Error {
  explicit PeriodUnidentified(Index t)
      : Error("PeriodUnidentified",
              "factor regression at period " + std::to_string(t) + " is not identified"),
        period(t) {}
  Index period;
};

struct SingularMoment : Error {
  explicit SingularMoment(const std::string& what) : Error("SingularMoment", what) {}
};

struct NotTreatedAt : Error {
  NotTreatedAt(Index i, Index t)
      : Error("NotTreatedAt", "unit " + std::to_string(i) + " is not treated at period " +
                                  std::to_string(t)) {}
};

struct TreatedWindowTooShort : Error {
  TreatedWindowTooShort(Index i, long have, long need)
      : Error("TreatedWindowTooShort",
              "unit " + std::to_string(i) + " has " + std::to_string(have) +
                  " identifiable treated periods (need >= " + std::to_string(need) + ")") {}
};

struct SingularZ : Error {
  explicit SingularZ(const std::string& what) : Error("SingularZ", what) {}
};

struct CsvError : Error {
  explicit CsvError(const std::string& what) : Error("CsvError", what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace lfm
