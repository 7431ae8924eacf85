#include "lobpred/labeling.hpp"

#include <string>

namespace lobpred {

Label label_from_int(int v) {
    if (v < -1 || v > 1) throw std::invalid_argument("label must be -1, 0 or 1, got " + std::to_string(v));
    return static_cast<Label>(v);
}

Label direction_label(MidQuoteX2 now, MidQuoteX2 future) noexcept {
    if (future < now) return Label::Down;
    if (future > now) return Label::Up;
    return Label::Flat;
}

LabeledSeries label_series(std::vector<MidQuoteX2> mids, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (mids.size() <= horizon) {
        throw std::invalid_argument("series shorter than horizon: " + std::to_string(mids.size()) +
                                    " mids, horizon " + std::to_string(horizon));
    }
    LabeledSeries out;
    out.horizon = horizon;
    out.labels.reserve(mids.size() - horizon);
    for (std::size_t i = 0; i + horizon < mids.size(); ++i) {
        out.labels.push_back(direction_label(mids[i], mids[i + horizon]));
    }
    out.mids = std::move(mids);
    return out;
}

std::vector<std::int64_t> cumulative_signal(std::span<const Label> labels, std::int64_t start) {
    std::vector<std::int64_t> out;
    out.reserve(labels.size() + 1);
    out.push_back(start);
    for (Label l : labels) out.push_back(out.back() + to_int(l));
    return out;
}

}  // namespace lobpred
