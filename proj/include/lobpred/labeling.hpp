#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lobpred/book.hpp"

namespace lobpred {

/// Mid-quote direction. Also used for classifier predictions.
enum class Label : std::int8_t { Down = -1, Flat = 0, Up = 1 };

inline constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }
/// 0, 1, 2 for Down, Flat, Up.
inline constexpr std::size_t class_index(Label l) noexcept { return static_cast<std::size_t>(to_int(l) + 1); }
inline constexpr Label label_from_index(std::size_t i) noexcept { return static_cast<Label>(static_cast<int>(i) - 1); }
Label label_from_int(int v);

Label direction_label(MidQuoteX2 now, MidQuoteX2 future) noexcept;

struct LabeledSeries {
    std::vector<MidQuoteX2> mids;
    std::size_t horizon = 1;
    std::vector<Label> labels;  // labels[i] compares mids[i] with mids[i + horizon]
};

LabeledSeries label_series(std::vector<MidQuoteX2> mids, std::size_t horizon = 1);

/// out[0] = start, out[i] = out[i-1] + labels[i-1].
std::vector<std::int64_t> cumulative_signal(std::span<const Label> labels, std::int64_t start);

}  // namespace lobpred
