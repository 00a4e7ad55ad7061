#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pila/model.hpp"
#include "pila/optim.hpp"

namespace pila {

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 64;
  AdamSettings adam;
  std::uint64_t seed = 7;  // same as the default scenario seed

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::vector<std::string> names;
  std::vector<double> weighted;  // epoch means of weight * raw
  std::vector<double> raw;       // epoch means of the unweighted terms
  double total = 0.0;            // sum of `weighted`
  double val_rec = 0.0;          // validation reconstruction MSE (train MSE when val is empty)
  std::size_t stabilized = 0;    // gradient tensors touched by stabilization
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_rec = 0.0;
};

// Raised when the objective goes non-finite; the message carries epoch, batch and breakdown.
class NonFiniteLoss : public NonFiniteError {
 public:
  using NonFiniteError::NonFiniteError;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch Adam with gradient stabilization after every backward pass. On return the model
// holds the parameters of the epoch with the lowest validation reconstruction error.
TrainResult train(InverseModel& model, const Tensor& train_x, const Tensor& val_x, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Reconstruction MSE of the deterministic path.
double reconstruction_mse(const InverseModel& model, const Tensor& x);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace pila
