#ifndef SEMADV_ATTACK_RESULT_HPP
#define SEMADV_ATTACK_RESULT_HPP

#include <vector>

#include "semadv/tensor.hpp"

namespace semadv {

// Outcome of one attack run. success always means: the target classifier's
// label of `adversarial` differs from `original_label`.
struct AttackResult {
    Tensor adversarial;
    bool success = false;
    int original_label = -1;
    int adversarial_label = -1;
    int iterations = 0;      // optimization / delta-decrement rounds executed
    int judge_queries = 0;   // forwards of the model driving the attack loop
    int target_queries = 0;  // forwards of the target classifier
    double wall_time_s = 0.0;
    std::vector<double> loss_trace;   // transform attack
    std::vector<double> delta_trace;  // masking attack
};

}  // namespace semadv

#endif  // SEMADV_ATTACK_RESULT_HPP
