use similar::{capture_diff_slices, Algorithm, DiffOp};

const BINARY_PROBE: usize = 8 * 1024;

/// Null byte in the first 8 KiB.
pub fn is_binary(bytes: &[u8]) -> bool {
    bytes[..bytes.len().min(BINARY_PROBE)].contains(&0)
}

pub fn count_lines(text: &str) -> u64 {
    text.lines().count() as u64
}

/// `(added, deleted)` line counts of a minimal (LCS-equivalent) line diff.
pub fn line_stats(before: &str, after: &str) -> (u64, u64) {
    let old: Vec<&str> = before.lines().collect();
    let new: Vec<&str> = after.lines().collect();
    let mut added = 0u64;
    let mut deleted = 0u64;
    for op in capture_diff_slices(Algorithm::Myers, &old, &new) {
        match op {
            DiffOp::Equal { .. } => {}
            DiffOp::Delete { old_len, .. } => deleted += old_len as u64,
            DiffOp::Insert { new_len, .. } => added += new_len as u64,
            DiffOp::Replace {
                old_len, new_len, ..
            } => {
                deleted += old_len as u64;
                added += new_len as u64;
            }
        }
    }
    (added, deleted)
}
