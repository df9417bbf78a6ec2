#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ecommit {

enum class PartyKind { Subscriber, Partner, Utility };

struct Party {
    std::string id;
    PartyKind kind = PartyKind::Subscriber;

    bool operator==(const Party&) const = default;
};

/// cm(i,j): kWh committed from column j (producer, partner SSP or Utility)
/// to row i (consumer, buying partner SSP or Utility). Rows of kind Partner
/// hold energy this SSP exports; columns of kind Partner hold imports.
class CommitmentMatrix {
public:
    CommitmentMatrix() = default;
    CommitmentMatrix(std::vector<Party> rows, std::vector<Party> cols);

    const std::vector<Party>& rows() const { return rows_; }
    const std::vector<Party>& cols() const { return cols_; }

    double& at(std::size_t row, std::size_t col) { return values_[row * cols_.size() + col]; }
    double at(std::size_t row, std::size_t col) const { return values_[row * cols_.size() + col]; }
    /// Zero when either id is not part of the matrix.
    double get(const std::string& row, const std::string& col) const;

    std::optional<std::size_t> rowIndex(const std::string& id) const;
    std::optional<std::size_t> colIndex(const std::string& id) const;

    /// Σ over non-Utility rows of column `col`: what a producer has committed
    /// to consumers and partners, excluding sell-back.
    double committedFrom(const std::string& col) const;
    /// Σ over non-Utility columns of row `row`.
    double suppliedTo(const std::string& row) const;

    /// Purchases from the Utility (its column).
    double utilityPurchases() const;
    /// Sell-back to the Utility (its row).
    double utilitySellBack() const;

    bool operator==(const CommitmentMatrix&) const = default;

private:
    std::vector<Party> rows_;
    std::vector<Party> cols_;
    std::vector<double> values_;
};

/// Purchases plus sell-backs, both counted positively.
double utilityInteraction(const CommitmentMatrix& cm);

/// fx per subscriber (and per partner SSP whose offered flexibility was used).
struct FlexibilityAssignment {
    std::vector<std::pair<std::string, double>> values;

    std::optional<double> get(const std::string& id) const;
    bool operator==(const FlexibilityAssignment&) const = default;
};

/// Wide CSV: header of column ids, one line per row id. The first header
/// cell is "row\\col" so the orientation is self-describing.
void writeCommitmentCsv(const CommitmentMatrix& cm, std::ostream& out);

/// Shortest decimal text that parses back to the same double.
std::string formatNumber(double value);

}  // namespace ecommit
