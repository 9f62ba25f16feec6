#include <algorithm>
#include <iostream>
#include <mutex>

#include "fractex/parallel.hpp"

namespace fractex {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(const std::string&)>& sink() {
  static std::function<void(const std::string&)> s = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

WarningCollector*& WarningCollector::current() {
  thread_local WarningCollector* c = nullptr;
  return c;
}

WarningCollector::WarningCollector() : previous_(current()) { current() = this; }

WarningCollector::~WarningCollector() { current() = previous_; }

void WarningCollector::add(const std::string& message) {
  std::lock_guard lock(mutex_);
  if (std::find(messages_.begin(), messages_.end(), message) == messages_.end()) messages_.push_back(message);
}

std::vector<std::string> WarningCollector::messages() const {
  std::lock_guard lock(mutex_);
  return messages_;
}

void set_warning_sink(std::function<void(const std::string&)> s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  if (auto* c = WarningCollector::current()) {
    c->add(message);
    return;
  }
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace fractex
