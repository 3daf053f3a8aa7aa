#pragma once

#include <stdexcept>
#include <string>

namespace vatspam {

// Error taxonomy. The CLI maps these onto exit codes:
// config_error -> 1, data_error -> 2, everything else -> 3.

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error("data: " + msg) {}
};

struct dim_error : std::runtime_error {
  explicit dim_error(const std::string& msg) : std::runtime_error("dimension: " + msg) {}
};

struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& msg) : std::runtime_error("domain: " + msg) {}
};

struct contract_error : std::runtime_error {
  explicit contract_error(const std::string& msg) : std::runtime_error("contract: " + msg) {}
};

struct index_error : std::runtime_error {
  explicit index_error(const std::string& msg) : std::runtime_error("index: " + msg) {}
};

struct render_error : std::runtime_error {
  explicit render_error(const std::string& msg) : std::runtime_error("render: " + msg) {}
};

}  // namespace vatspam
