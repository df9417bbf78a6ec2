#include "ecommit/commitment.hpp"

#include <charconv>
#include <ostream>

namespace ecommit {

CommitmentMatrix::CommitmentMatrix(std::vector<Party> rows, std::vector<Party> cols)
    : rows_(std::move(rows)), cols_(std::move(cols)), values_(rows_.size() * cols_.size(), 0.0)
{
}

std::optional<std::size_t> CommitmentMatrix::rowIndex(const std::string& id) const
{
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].id == id) {
            return r;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> CommitmentMatrix::colIndex(const std::string& id) const
{
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (cols_[c].id == id) {
            return c;
        }
    }
    return std::nullopt;
}

double CommitmentMatrix::get(const std::string& row, const std::string& col) const
{
    const auto r = rowIndex(row);
    const auto c = colIndex(col);
    if (!r || !c) {
        return 0.0;
    }
    return at(*r, *c);
}

double CommitmentMatrix::committedFrom(const std::string& col) const
{
    const auto c = colIndex(col);
    if (!c) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].kind != PartyKind::Utility) {
            total += at(r, *c);
        }
    }
    return total;
}

double CommitmentMatrix::suppliedTo(const std::string& row) const
{
    const auto r = rowIndex(row);
    if (!r) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (cols_[c].kind != PartyKind::Utility) {
            total += at(*r, c);
        }
    }
    return total;
}

double CommitmentMatrix::utilityPurchases() const
{
    double total = 0.0;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (cols_[c].kind != PartyKind::Utility) {
            continue;
        }
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].kind != PartyKind::Utility) {
                total += at(r, c);
            }
        }
    }
    return total;
}

double CommitmentMatrix::utilitySellBack() const
{
    double total = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].kind != PartyKind::Utility) {
            continue;
        }
        for (std::size_t c = 0; c < cols_.size(); ++c) {
            if (cols_[c].kind != PartyKind::Utility) {
                total += at(r, c);
            }
        }
    }
    return total;
}

double utilityInteraction(const CommitmentMatrix& cm)
{
    return cm.utilityPurchases() + cm.utilitySellBack();
}

std::optional<double> FlexibilityAssignment::get(const std::string& id) const
{
    for (const auto& [key, value] : values) {
        if (key == id) {
            return value;
        }
    }
    return std::nullopt;
}

std::string formatNumber(double value)
{
    if (value == 0.0) {
        return "0";  // also folds -0
    }
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

void writeCommitmentCsv(const CommitmentMatrix& cm, std::ostream& out)
{
    out << "row\\col";
    for (const auto& col : cm.cols()) {
        out << ',' << col.id;
    }
    out << '\n';
    for (std::size_t r = 0; r < cm.rows().size(); ++r) {
        out << cm.rows()[r].id;
        for (std::size_t c = 0; c < cm.cols().size(); ++c) {
            out << ',' << formatNumber(cm.at(r, c));
        }
        out << '\n';
    }
}

}  // namespace ecommit
