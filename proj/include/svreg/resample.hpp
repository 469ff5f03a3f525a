#pragma once

#include "svreg/field.hpp"

namespace svreg {

/// Nearest-neighbour downsampling: coarse voxel i takes the fine sample at
/// factor * i. Throws ResampleError unless `factor` divides every dimension
/// and the coarse grid is valid.
ScalarField restrict_nearest(const ScalarField& field, int factor);
LabelMap restrict_nearest(const LabelMap& labels, int factor);

/// Upsampling by zero-padding the Fourier spectrum. A Nyquist coefficient of
/// the source is split evenly between the +N/2 and -N/2 modes of the target,
/// so band-limited fields keep their point values. target == source is an
/// FFT round trip.
ScalarField prolong_spectral(const ScalarField& field, const Grid& target);
VectorField prolong_spectral(const VectorField& field, const Grid& target);

}  // namespace svreg
