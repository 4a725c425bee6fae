#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kprune/model.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

enum class Capture { kOff, kOn };

// Per prunable op, the summed |activation| of each output unit over all
// spatial positions (and over every image accumulated into the trace).
struct ActivationTrace {
  std::map<std::string, std::vector<double>> unit_abs_sums;

  void accumulate(const ActivationTrace& other);
};

// Notified when execution enters and leaves a contiguous run of ops with the
// same block index. Index 0 is the decoder.
class ForwardObserver {
 public:
  virtual ~ForwardObserver() = default;
  virtual void segment_begin(int /*block*/) {}
  virtual void segment_end(int /*block*/) {}
};

struct ForwardResult {
  Tensor logits;  // [K,H,W]
  std::optional<ActivationTrace> trace;
};

ForwardResult forward(const ModelGraph& model, const Tensor& image, Capture capture = Capture::kOff,
                      ForwardObserver* observer = nullptr);

}  // namespace kprune
