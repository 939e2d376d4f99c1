#ifndef ANRSP_ANRSP_HPP
#define ANRSP_ANRSP_HPP

#include "anrsp/config.hpp"
#include "anrsp/dual.hpp"
#include "anrsp/errors.hpp"
#include "anrsp/io.hpp"
#include "anrsp/maps.hpp"
#include "anrsp/parallel.hpp"
#include "anrsp/perturbed.hpp"
#include "anrsp/pipeline.hpp"
#include "anrsp/response.hpp"
#include "anrsp/spectral.hpp"
#include "anrsp/transfer.hpp"
#include "anrsp/validate.hpp"

#endif  // ANRSP_ANRSP_HPP
