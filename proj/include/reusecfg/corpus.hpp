#pragma once

#include <reusecfg/bytecode.hpp>
#include <reusecfg/metrics.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reusecfg
{
// ---------------------------------------------------------------------------
// Assembler

/// Label-resolving bytecode builder. Label references are always PUSH2 so
/// layout does not depend on label values.
class Assembler
{
public:
    Assembler& op(uint8_t opcode);
    Assembler& op(std::string_view mnemonic);
    /// PUSH with the minimal width for `value` (PUSH1 for zero), or the
    /// given width in bytes.
    Assembler& push(const u256& value, unsigned width = 0);
    Assembler& push_label(const std::string& name);
    /// JUMPDEST bound to `name`.
    Assembler& label(const std::string& name);
    /// Binds `name` to the current offset without emitting anything.
    Assembler& mark(const std::string& name);
    Assembler& raw(std::span<const uint8_t> data);
    Assembler& append(const Assembler& other);

    uint64_t size() const noexcept { return code_.size(); }
    /// Resolves label references. Throws std::invalid_argument on unknown
    /// or duplicate labels.
    bytes finish() const;
    uint64_t offset_of(const std::string& name) const;
    bool has_label(const std::string& name) const { return labels_.contains(name); }

private:
    bytes code_;
    std::map<std::string, uint64_t> labels_;
    std::vector<std::pair<uint64_t, std::string>> refs_;
    std::vector<std::string> duplicates_;
};

/// Text assembly: whitespace-separated tokens, `;` comments to end of line.
///   name:          JUMPDEST bound to name
///   PUSH @name     PUSH2 of a label
///   PUSHn 0x..     explicit width;  PUSH 0x.. minimal width
///   MNEMONIC       any opcode name (KECCAK256 and SHA3 both accepted)
///   .byte 0x..     raw bytes
bytes assemble(std::string_view text);

// ---------------------------------------------------------------------------
// Concrete interpreter (ground-truth oracle)

/// 256-bit word as four little-endian 64-bit limbs, independent of u256.
struct Word
{
    std::array<uint64_t, 4> limb{};

    static Word from(const u256& v);
    u256 to_u256() const;
    friend bool operator==(const Word&, const Word&) = default;
};

/// Reference semantics of the foldable opcodes over limb arithmetic, operands
/// in pop order. Throws std::invalid_argument for other opcodes.
Word interp_eval(uint8_t opcode, std::span<const Word> args);

struct InterpreterConfig
{
    uint32_t branch_bound = 16;
    /// Value returned by CALLDATALOAD. Such values are branch inputs: a JUMPI
    /// on them forks while decisions remain.
    u256 calldata_value = 1;
    uint64_t step_limit = 1'000'000;
};

enum class RunOutcome : uint8_t
{
    Stop,
    Return,
    Revert,  ///< includes invalid jumps, underflow and INVALID
};

struct Run
{
    Trace trace;
    RunOutcome outcome = RunOutcome::Stop;
    uint32_t decisions = 0;
    /// Stack at the end of the run, index 0 = bottom.
    std::vector<u256> final_stack;
};

class InterpreterError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// All forked runs. Throws InterpreterError on unsupported opcodes or when a
/// run exceeds the step limit.
std::vector<Run> interpret_runs(std::span<const uint8_t> code, const InterpreterConfig& config = {});

/// Distinct block-offset traces, sorted.
std::vector<Trace> interpret(std::span<const uint8_t> code, uint32_t branch_bound = 16);

// ---------------------------------------------------------------------------
// Pattern generator

enum class Pattern : uint8_t
{
    BasicFakeJoin,
    BasicFakeLoop,
    FakeJoinSequence,
    NestedFakeLoops,
    FakeJoinWithReal,
    FakeLoopWithRealLoop,
    FakeJoinMultiExit,
    FakeLoopWithTransfers,
};

inline constexpr std::array all_patterns{Pattern::BasicFakeJoin, Pattern::BasicFakeLoop,
    Pattern::FakeJoinSequence, Pattern::NestedFakeLoops, Pattern::FakeJoinWithReal,
    Pattern::FakeLoopWithRealLoop, Pattern::FakeJoinMultiExit, Pattern::FakeLoopWithTransfers};

std::string_view to_string(Pattern p) noexcept;
std::optional<Pattern> parse_pattern(std::string_view name) noexcept;

struct PatternSpec
{
    Pattern pattern = Pattern::BasicFakeJoin;
    uint64_t seed = 0;
    uint32_t nesting_depth = 1;
};

struct GroundTruth
{
    bytes bytecode;
    std::set<uint64_t> reused_offsets;
    bigint expected_sensitive_paths = 0;
    bigint expected_insensitive_paths = 0;
    std::vector<Trace> traces;
};

inline constexpr size_t max_code_size = 24576;

/// Throws std::invalid_argument for depth 0 or output above max_code_size.
GroundTruth generate(const PatternSpec& spec);

/// Two guarded calls of one shared increment routine separated by a real
/// join: 4 feasible paths.
GroundTruth guarded_calls_example();

/// A calls X with return C; C branches to E or falls into B; both call X
/// with return D. Labels A, X, C, B, E, D are exported through `offsets`.
GroundTruth shared_callee_example(std::map<std::string, uint64_t>* offsets = nullptr);

/// Many pattern instances behind one dispatcher, close to `target_size`
/// bytes. Ground-truth counts are not computed.
bytes large_composition(uint64_t seed, size_t target_size = 24000);

/// Manifest JSON for a generated fixture.
std::string manifest_json(const PatternSpec& spec, const GroundTruth& gt);

}  // namespace reusecfg
