#ifndef PERSPECTRA_PRF_HPP
#define PERSPECTRA_PRF_HPP

namespace perspectra {

// Precision / recall / F1 triple. F1 is the plain harmonic mean (beta = 1)
// and is defined as 0 when precision + recall = 0.
struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const Prf&) const = default;
};

inline double harmonic_f1(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

inline Prf make_prf(double precision, double recall) {
    return Prf{precision, recall, harmonic_f1(precision, recall)};
}

// P = tp/pred_total, R = tp/gold_total, with 0/0 = 0.
inline Prf prf_from_counts(double tp, double pred_total, double gold_total) {
    const double p = pred_total > 0.0 ? tp / pred_total : 0.0;
    const double r = gold_total > 0.0 ? tp / gold_total : 0.0;
    return make_prf(p, r);
}

}  // namespace perspectra

#endif
