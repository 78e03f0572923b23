#include "rotdef/rotation.hpp"

#include <cmath>

namespace rotdef {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

void validate(const RotationConfig& config) {
    if (config.angle_min < 0 || config.angle_min > config.angle_max || config.angle_max > 359) {
        throw ValidationError("rotation: need 0 <= angle_min <= angle_max <= 359, got [" +
                              std::to_string(config.angle_min) + "," +
                              std::to_string(config.angle_max) + "]");
    }
    if (config.angle_step < 1) {
        throw ValidationError("rotation: angle_step must be >= 1");
    }
}

}  // namespace

Image rotate(const Image& image, double angle_degrees, double fill_value) {
    const double a = angle_degrees * kDegToRad;
    const double cos_a = std::cos(a);
    const double sin_a = std::sin(a);
    const double center = (static_cast<double>(kImageRows) - 1.0) / 2.0;

    Image out;
    for (std::size_t row = 0; row < kImageRows; ++row) {
        const double dr = static_cast<double>(row) - center;
        for (std::size_t col = 0; col < kImageCols; ++col) {
            const double dc = static_cast<double>(col) - center;
            // Inverse rotation of the output coordinate locates the source sample.
            const double src_r = cos_a * dr + sin_a * dc + center;
            const double src_c = -sin_a * dr + cos_a * dc + center;
            const double fr = std::floor(src_r);
            const double fc = std::floor(src_c);
            const long r0 = static_cast<long>(fr);
            const long c0 = static_cast<long>(fc);
            const double wr = src_r - fr;
            const double wc = src_c - fc;

            auto sample = [&](long r, long c) {
                if (r < 0 || c < 0 || r >= static_cast<long>(kImageRows) ||
                    c >= static_cast<long>(kImageCols)) {
                    return fill_value;
                }
                return image.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            };
            const double top = (1.0 - wc) * sample(r0, c0) + wc * sample(r0, c0 + 1);
            const double bottom = (1.0 - wc) * sample(r0 + 1, c0) + wc * sample(r0 + 1, c0 + 1);
            out.at(row, col) = (1.0 - wr) * top + wr * bottom;
        }
    }
    return out;
}

SweepRecord sweep(const Model& model, const Image& image, int true_class,
                  const RotationConfig& config) {
    validate(config);
    if (true_class < 0 || true_class >= static_cast<int>(kNumClasses)) {
        throw ValueError("sweep: true_class " + std::to_string(true_class) + " outside 0..9");
    }

    SweepRecord record;
    for (int angle = config.angle_min; angle <= config.angle_max; angle += config.angle_step) {
        const Image rotated =
            angle == 0 ? image : rotate(image, static_cast<double>(angle), config.fill_value);
        record.angles.push_back(angle);
        record.curves.push_back(predict_proba(model, rotated));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < record.curves.size(); ++i) {
        if (record.curves[i][static_cast<std::size_t>(true_class)] >
            record.curves[best][static_cast<std::size_t>(true_class)]) {
            best = i;
        }
    }
    record.best_angle = record.angles[best];
    record.best_confidence = record.curves[best][static_cast<std::size_t>(true_class)];
    record.recovered = argmax_class(record.curves[best]) == true_class;
    return record;
}

std::pair<bool, SweepRecord> defend(const Model& model, const Image& adversarial_image,
                                    int true_class, const RotationConfig& config) {
    SweepRecord record = sweep(model, adversarial_image, true_class, config);
    const bool recovered = record.recovered;
    return {recovered, std::move(record)};
}

}  // namespace rotdef
