#pragma once

// Classifiers and the regression baseline: RBF C-SVC and epsilon-SVR trained
// by SMO, the class-balanced perceptron, and their file format.

#include "flownav/kernel.hpp"
#include "flownav/model_io.hpp"
#include "flownav/perceptron.hpp"
#include "flownav/smo.hpp"
#include "flownav/svm.hpp"
#include "flownav/svr.hpp"
