#pragma once

#include <stdexcept>
#include <string>

namespace fairaoi {

// Bad or inconsistent configuration input. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A formula was evaluated outside the region where the model is defined
// (e.g. more shared candidates than resources).
class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// Rate triple with service_rate <= reeval_rate: the renewal chain has no
// stationary regime. Carries the offending link index.
class infeasible_rates_error : public std::runtime_error {
 public:
  infeasible_rates_error(std::size_t link, const std::string& what)
      : std::runtime_error(what), link_(link) {}
  std::size_t link() const { return link_; }

 private:
  std::size_t link_;
};

}  // namespace fairaoi
