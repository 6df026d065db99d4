#include "watz/profile.hpp"

namespace watz::profile {

namespace {
thread_local Recorder* tls_recorder = nullptr;
}

Recorder* current_recorder() noexcept { return tls_recorder; }

ScopedRecorder::ScopedRecorder(Recorder& recorder) noexcept : previous_(tls_recorder) { tls_recorder = &recorder; }

ScopedRecorder::~ScopedRecorder() { tls_recorder = previous_; }

const char* to_string(Party p) noexcept { return p == Party::attester ? "attester" : "verifier"; }

const char* to_string(Message m) noexcept {
  switch (m) {
    case Message::msg0:
      return "msg0";
    case Message::msg1:
      return "msg1";
    case Message::msg2:
      return "msg2";
    case Message::msg3:
      return "msg3";
  }
  return "?";
}

const char* to_string(Category c) noexcept {
  switch (c) {
    case Category::memory:
      return "Memory management";
    case Category::key_generation:
      return "Key generation";
    case Category::symmetric:
      return "Symmetric cryptography";
    case Category::asymmetric:
      return "Asymmetric cryptography";
  }
  return "?";
}

}  // namespace watz::profile
