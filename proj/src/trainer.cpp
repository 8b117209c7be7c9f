/* Copyright 2026 The latentstory Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "latentstory/trainer.hpp"

#include <iomanip>

namespace latentstory {

double lr_schedule(long step, long total, double lr0) {
  if (total <= 0) throw ConfigError("steps: learning-rate schedule needs a positive step count");
  if (step < 0 || step > total) throw ConfigError("step " + std::to_string(step) + " outside [0, " + std::to_string(total) + "]");
  return lr0 * (1.0 - static_cast<double>(step) / static_cast<double>(total));
}

CsvLog::CsvLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw DataError("cannot open log file '" + path.string() + "'");
  if (fresh) out_ << "step,lr,tau,loss,recon,entr,disc,grad_norm\n";
  out_ << std::setprecision(8);
}

void CsvLog::write(const TrainLogRow& r) {
  out_ << r.step << ',' << r.lr << ',' << r.tau << ',' << r.loss << ',' << r.recon << ',' << r.entr << ',' << r.disc
       << ',' << r.grad_norm << '\n';
  out_.flush();
}

BatchPlan::BatchPlan(std::size_t n_examples, int per_step, bool overfit, std::uint64_t seed)
    : n_(n_examples), per_step_(per_step), overfit_(overfit), rng_(seed) {
  if (n_ == 0) throw DataError("training corpus is empty");
  if (per_step_ <= 0) throw ConfigError("batch_size: must be positive");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), 0);
  if (!overfit_) std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<std::size_t> BatchPlan::next() {
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(per_step_));
  if (overfit_) {
    for (int i = 0; i < per_step_; ++i) batch.push_back(order_[static_cast<std::size_t>(i) % n_]);
    return batch;
  }
  for (int i = 0; i < per_step_; ++i) {
    if (cursor_ == n_) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

}  // namespace latentstory
