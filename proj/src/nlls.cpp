#include "cpfmesh/nlls.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>

namespace cpfmesh {

int ResidualSystem::addBlock(std::vector<int> variables, int residuals, BlockEvaluator f, std::string tag) {
    for (int v : variables)
        if (v < 0 || v >= variableCount_) throw std::out_of_range("residual block references unknown variable");
    rowOffset_.push_back(residualCount_);
    residualCount_ += residuals;
    blocks_.push_back({std::move(variables), residuals, std::move(f), std::move(tag)});
    return static_cast<int>(blocks_.size()) - 1;
}

void ResidualSystem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::SparseMatrix<double>* J) const {
    r.resize(residualCount_);
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<double> local, jac;
    for (size_t b = 0; b < blocks_.size(); ++b) {
        const ResidualBlock& blk = blocks_[b];
        const int k = static_cast<int>(blk.variables.size());
        local.resize(k);
        for (int i = 0; i < k; ++i) local[i] = x[blk.variables[i]];
        jac.assign(static_cast<size_t>(k) * blk.residuals, 0.0);
        blk.evaluate(local.data(), r.data() + rowOffset_[b], J ? jac.data() : nullptr);
        if (J)
            for (int i = 0; i < blk.residuals; ++i)
                for (int j = 0; j < k; ++j) triplets.emplace_back(rowOffset_[b] + i, blk.variables[j], jac[i * k + j]);
    }
    if (J) {
        J->resize(residualCount_, variableCount_);
        J->setFromTriplets(triplets.begin(), triplets.end());
    }
}

double ResidualSystem::cost(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r;
    evaluate(x, r);
    return r.squaredNorm();
}

std::vector<std::pair<std::string, double>> ResidualSystem::costByTag(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r;
    evaluate(x, r);
    std::map<std::string, double> sums;
    for (size_t b = 0; b < blocks_.size(); ++b)
        sums[blocks_[b].tag] += r.segment(rowOffset_[b], blocks_[b].residuals).squaredNorm();
    return {sums.begin(), sums.end()};
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::GradientTolerance: return "gradient_tolerance";
        case Termination::StepTolerance: return "step_tolerance";
        case Termination::FunctionTolerance: return "function_tolerance";
        case Termination::MaxIterations: return "max_iterations";
        case Termination::DampingLimit: return "damping_limit";
        case Termination::Stopped: return "stopped";
    }
    return "unknown";
}

SolverReport solve_lm(const ResidualSystem& system, Eigen::VectorXd& x, const SolverOptions& opt) {
    SolverReport report;
    Eigen::VectorXd r, rTrial;
    Eigen::SparseMatrix<double> J;
    system.evaluate(x, r, &J);
    if (!r.allFinite()) throw NumericalError("non-finite residual at the initial point");
    double cost = r.squaredNorm();
    report.initialCost = report.finalCost = cost;
    report.history.push_back({0, cost, opt.initialDamping, 0.0, true});

    double mu = opt.initialDamping;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool fresh = true;  // J, r belong to the current x
    Eigen::SparseMatrix<double> JtJ;
    Eigen::VectorXd g, diag;

    for (int it = 1; it <= opt.maxIterations; ++it) {
        report.iterations = it;
        if (fresh) {
            JtJ = J.transpose() * J;
            g = J.transpose() * r;
            diag = JtJ.diagonal();
            fresh = false;
        }
        if (g.lpNorm<Eigen::Infinity>() <= opt.gradientTolerance) {
            report.termination = Termination::GradientTolerance;
            report.iterations = it - 1;
            break;
        }
        Eigen::SparseMatrix<double> A = JtJ;
        const double diagFloor = 1e-12 * std::max(1.0, diag.maxCoeff());
        for (int i = 0; i < A.rows(); ++i)
            A.coeffRef(i, i) += mu * (opt.jacobianScaling ? std::max(diag[i], diagFloor) : 1.0);
        ldlt.compute(A);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) step = ldlt.solve(-g);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            mu *= opt.dampingIncrease;
            report.history.push_back({it, cost, mu, 0.0, false});
            if (mu > 1e32) {
                report.termination = Termination::DampingLimit;
                break;
            }
            continue;
        }
        const double stepNorm = step.norm();
        if (stepNorm <= opt.stepTolerance * (x.norm() + opt.stepTolerance)) {
            report.termination = Termination::StepTolerance;
            break;
        }
        if (opt.functionTolerance > 0) {
            // Decrease predicted by the undamped linear model.
            const double predicted = -2.0 * g.dot(step) - (J * step).squaredNorm();
            if (predicted <= opt.functionTolerance * cost) {
                report.termination = Termination::FunctionTolerance;
                break;
            }
        }
        const Eigen::VectorXd xTrial = x + step;
        system.evaluate(xTrial, rTrial);
        const double trialCost = rTrial.allFinite() ? rTrial.squaredNorm() : INFINITY;
        if (trialCost < cost) {
            const double previous = cost;
            x = xTrial;
            mu = std::max(mu / opt.dampingDecrease, opt.minDamping);
            bool keepGoing = true;
            if (opt.onAccept) keepGoing = opt.onAccept(x);
            system.evaluate(x, r, &J);
            cost = r.squaredNorm();
            fresh = true;
            report.history.push_back({it, cost, mu, stepNorm, true});
            if (!keepGoing) {
                report.termination = Termination::Stopped;
                break;
            }
            if (opt.functionTolerance > 0 && previous - trialCost <= opt.functionTolerance * previous) {
                report.termination = Termination::FunctionTolerance;
                break;
            }
        } else {
            mu *= opt.dampingIncrease;
            report.history.push_back({it, cost, mu, stepNorm, false});
            if (mu > 1e32) {
                report.termination = Termination::DampingLimit;
                break;
            }
        }
        if (it == opt.maxIterations) report.termination = Termination::MaxIterations;
    }
    report.finalCost = cost;
    return report;
}

double check_jacobian(const ResidualSystem& system, const Eigen::VectorXd& x, double h, double floor) {
    double worst = 0;
    std::vector<double> local, jac, rp, rm;
    for (const ResidualBlock& blk : system.blocks()) {
        const int k = static_cast<int>(blk.variables.size()), m = blk.residuals;
        local.resize(k);
        for (int i = 0; i < k; ++i) local[i] = x[blk.variables[i]];
        jac.assign(static_cast<size_t>(k) * m, 0.0);
        rp.assign(m, 0.0);
        rm.assign(m, 0.0);
        blk.evaluate(local.data(), rp.data(), jac.data());
        for (int j = 0; j < k; ++j) {
            const double saved = local[j];
            const double step = h * std::max(1.0, std::abs(saved));
            local[j] = saved + step;
            blk.evaluate(local.data(), rp.data(), nullptr);
            local[j] = saved - step;
            blk.evaluate(local.data(), rm.data(), nullptr);
            local[j] = saved;
            for (int i = 0; i < m; ++i) {
                const double fd = (rp[i] - rm[i]) / (2.0 * step);
                const double an = jac[i * k + j];
                const double scale = std::max(std::abs(fd), std::abs(an));
                if (scale > floor) worst = std::max(worst, std::abs(fd - an) / scale);
            }
        }
    }
    return worst;
}

}  // namespace cpfmesh
