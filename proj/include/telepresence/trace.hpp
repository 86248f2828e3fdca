#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "telepresence/retarget.hpp"
#include "telepresence/state_machine.hpp"

namespace telepresence {

/// Recorded tracking stream: a header line with tick rate and skeleton, then one snapshot per line.
struct MotionTrace {
    double tick_rate = 60.0;
    Skeleton skeleton;
    std::vector<UserSnapshot> snapshots;
};

MotionTrace load_trace(std::string_view jsonl);
MotionTrace load_trace_file(const std::string& path);
std::string trace_to_jsonl(const MotionTrace& trace);
void save_trace_file(const MotionTrace& trace, const std::string& path);

}  // namespace telepresence
