#pragma once

#include <mutex>

namespace chaosavg::detail {

// FFTW's planner is not thread-safe; every plan create/destroy takes this lock.
std::mutex& fftw_planner_mutex();

}  // namespace chaosavg::detail
