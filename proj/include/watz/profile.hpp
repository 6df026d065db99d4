#pragma once

// Timing spans inside the protocol code. Spans are no-ops unless a Recorder
// is installed on the calling thread, which only the bench harness does.

#include <array>
#include <chrono>
#include <cstdint>

namespace watz::profile {

enum class Party : std::uint8_t { attester, verifier };
enum class Message : std::uint8_t { msg0, msg1, msg2, msg3 };
enum class Category : std::uint8_t { memory, key_generation, symmetric, asymmetric };

inline constexpr std::size_t kParties = 2;
inline constexpr std::size_t kMessages = 4;
inline constexpr std::size_t kCategories = 4;

const char* to_string(Party p) noexcept;
const char* to_string(Message m) noexcept;
const char* to_string(Category c) noexcept;

class Recorder {
 public:
  void add(Party p, Message m, Category c, std::chrono::nanoseconds d) noexcept { cell(p, m, c) += d; }
  std::chrono::nanoseconds get(Party p, Message m, Category c) const noexcept {
    return cells_[index(p, m, c)];
  }
  void reset() noexcept { cells_.fill(std::chrono::nanoseconds::zero()); }

 private:
  static std::size_t index(Party p, Message m, Category c) noexcept {
    return (static_cast<std::size_t>(p) * kMessages + static_cast<std::size_t>(m)) * kCategories +
           static_cast<std::size_t>(c);
  }
  std::chrono::nanoseconds& cell(Party p, Message m, Category c) noexcept { return cells_[index(p, m, c)]; }

  std::array<std::chrono::nanoseconds, kParties * kMessages * kCategories> cells_{};
};

Recorder* current_recorder() noexcept;

class ScopedRecorder {
 public:
  explicit ScopedRecorder(Recorder& recorder) noexcept;
  ~ScopedRecorder();
  ScopedRecorder(const ScopedRecorder&) = delete;
  ScopedRecorder& operator=(const ScopedRecorder&) = delete;

 private:
  Recorder* previous_;
};

class Span {
 public:
  Span(Party p, Message m, Category c) noexcept : recorder_(current_recorder()), party_(p), message_(m), category_(c) {
    if (recorder_ != nullptr) start_ = std::chrono::steady_clock::now();
  }
  ~Span() {
    if (recorder_ != nullptr) recorder_->add(party_, message_, category_, std::chrono::steady_clock::now() - start_);
  }
  Span(const Span&) = delete;
  Span& operator=(const Span&) = delete;

 private:
  Recorder* recorder_;
  Party party_;
  Message message_;
  Category category_;
  std::chrono::steady_clock::time_point start_{};
};

}  // namespace watz::profile
