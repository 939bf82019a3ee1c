#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpfmesh {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluates a small residual block. `x` holds the block's variables in order; `jac`, when not
// null, receives the row-major (residuals x variables) Jacobian.
using BlockEvaluator = std::function<void(const double* x, double* r, double* jac)>;

struct ResidualBlock {
    std::vector<int> variables;
    int residuals;
    BlockEvaluator evaluate;
    std::string tag;
};

class ResidualSystem {
public:
    explicit ResidualSystem(int variableCount) : variableCount_(variableCount) {}

    int addBlock(std::vector<int> variables, int residuals, BlockEvaluator f, std::string tag = {});

    int variableCount() const { return variableCount_; }
    int residualCount() const { return residualCount_; }
    const std::vector<ResidualBlock>& blocks() const { return blocks_; }

    void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::SparseMatrix<double>* J = nullptr) const;
    double cost(const Eigen::VectorXd& x) const;  // sum of squared residuals
    // Sum of squared residuals per tag.
    std::vector<std::pair<std::string, double>> costByTag(const Eigen::VectorXd& x) const;

private:
    int variableCount_;
    int residualCount_ = 0;
    std::vector<ResidualBlock> blocks_;
    std::vector<int> rowOffset_;
};

enum class Termination { GradientTolerance, StepTolerance, FunctionTolerance, MaxIterations, DampingLimit, Stopped };
const char* termination_name(Termination t);

struct IterationRecord {
    int iteration;
    double cost;
    double damping;
    double stepNorm;
    bool accepted;
};

struct SolverOptions {
    int maxIterations = 500;
    double gradientTolerance = 1e-10;  // on max |J^T r|
    double stepTolerance = 1e-12;      // relative step length
    double functionTolerance = 0;      // relative cost decrease (actual or predicted); 0 disables
    double initialDamping = 1e-4;
    double dampingIncrease = 2.0;
    double dampingDecrease = 3.0;
    double minDamping = 1e-15;
    bool jacobianScaling = true;
    // Runs after every accepted step and may change the residual definitions (e.g. barrier
    // anchors). Returning false stops the solve.
    std::function<bool(const Eigen::VectorXd&)> onAccept;
};

struct SolverReport {
    int iterations = 0;
    double initialCost = 0;
    double finalCost = 0;
    Termination termination = Termination::MaxIterations;
    std::vector<IterationRecord> history;
};

// Levenberg-Marquardt with a sparse Cholesky solve of the damped normal equations.
SolverReport solve_lm(const ResidualSystem& system, Eigen::VectorXd& x, const SolverOptions& options = {});

// Largest relative difference between analytic and central-difference Jacobian entries
// whose magnitude exceeds `floor`.
double check_jacobian(const ResidualSystem& system, const Eigen::VectorXd& x, double h = 1e-6, double floor = 1e-8);

}  // namespace cpfmesh
