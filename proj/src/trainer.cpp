#include "pila/trainer.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pila/csv.hpp"

namespace pila {
namespace {

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  Tensor out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row_span(rows[i]);
    std::copy(src.begin(), src.end(), out.row_span(i).begin());
  }
  return out;
}

std::string breakdown(const LossParts& parts) {
  std::string s;
  for (const auto& t : parts.terms) s += fmt::format(" {}={} (w={})", t.name, t.raw.item(), t.weight);
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
  if (!(adam.weight_decay >= 0.0)) throw std::invalid_argument("train.weight_decay must be >= 0");
}

double reconstruction_mse(const InverseModel& model, const Tensor& x) {
  if (x.rows() == 0) throw std::invalid_argument("reconstruction_mse: empty batch");
  const Inference inf = model.infer(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - inf.x_c[i]) * (x[i] - inf.x_c[i]);
  return acc / static_cast<double>(x.size());
}

TrainResult train(InverseModel& model, const Tensor& train_x, const Tensor& val_x, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_x.rows() == 0) throw std::invalid_argument("train: empty training set");
  const std::size_t d = model.context().dim();
  if (train_x.cols() != d) throw ShapeError("train: data vs model", train_x.shape(), Shape{1, d});
  if (val_x.rows() > 0 && val_x.cols() != d) throw ShapeError("train: val vs model", val_x.shape(), Shape{1, d});

  const CounterRng root(config.seed, 0x7a11);
  CounterRng sampler = root.substream(1);
  CounterRng stabilizer = root.substream(2);
  AdamState adam(model.params(), config.adam);

  std::vector<std::size_t> order(train_x.rows());
  TrainResult result;
  std::vector<Tensor> best;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model.begin_epoch(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng shuffler = root.substream(1000 + epoch);
    shuffler.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const Tensor xb = gather_rows(train_x, std::span(order).subspan(start, stop - start));
      Tape tape;
      const LossParts parts = model.training_loss(tape, xb, sampler);
      const double total = parts.total.item();
      if (!std::isfinite(total))
        throw NonFiniteLoss(
            fmt::format("non-finite loss at epoch {} batch {}:{}", epoch, batches, breakdown(parts)));
      if (rec.names.empty()) {
        for (const auto& t : parts.terms) rec.names.push_back(t.name);
        rec.weighted.assign(parts.terms.size(), 0.0);
        rec.raw.assign(parts.terms.size(), 0.0);
      }
      for (std::size_t k = 0; k < parts.terms.size(); ++k) {
        const double raw = parts.terms[k].raw.item();
        rec.raw[k] += raw;
        rec.weighted[k] += parts.terms[k].weight * raw;
      }
      Gradients grads = tape.backward(parts.total, model.params());
      rec.stabilized += stabilize_gradients(grads, stabilizer);
      adam_step(model.params(), grads, adam);
    }
    rec.total = 0.0;
    for (std::size_t k = 0; k < rec.raw.size(); ++k) {
      rec.raw[k] /= static_cast<double>(batches);
      rec.weighted[k] /= static_cast<double>(batches);
      rec.total += rec.weighted[k];
    }
    model.end_epoch(epoch, rec.raw);

    rec.val_rec = reconstruction_mse(model, val_x.rows() > 0 ? val_x : train_x);
    if (!std::isfinite(rec.val_rec))
      throw NonFiniteLoss(fmt::format("non-finite validation reconstruction at epoch {}", epoch));
    if (rec.val_rec < best_val) {
      best_val = rec.val_rec;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& p : model.params().all()) best.push_back(p.value);
    }
    if (on_epoch) on_epoch(rec);
    result.history.push_back(std::move(rec));
  }

  for (std::size_t i = 0; i < best.size(); ++i) model.params().value(i) = best[i];
  model.begin_epoch(result.best_epoch);
  result.best_val_rec = best_val;
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::vector<std::string> header = {"epoch", "total"};
  if (!history.empty())
    for (const auto& n : history.front().names) header.push_back("loss_" + n);
  header.emplace_back("val_rec");
  header.emplace_back("stabilized");
  csv::Writer w(path, header);
  std::vector<std::string> cells;
  for (const auto& r : history) {
    cells = {std::to_string(r.epoch), csv::format_double(r.total)};
    for (double v : r.weighted) cells.push_back(csv::format_double(v));
    cells.push_back(csv::format_double(r.val_rec));
    cells.push_back(std::to_string(r.stabilized));
    w.row(cells);
  }
  w.close();
}

}  // namespace pila
