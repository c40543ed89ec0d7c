#pragma once

#include <acr/annotations.hpp>
#include <acr/augment.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>
#include <acr/features.hpp>
#include <acr/focal.hpp>
#include <acr/metrics.hpp>
#include <acr/pipeline.hpp>
#include <acr/selection.hpp>
#include <acr/student.hpp>
#include <acr/synth.hpp>
