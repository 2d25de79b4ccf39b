//! Code-point indexing helpers. Every offset in this crate counts Unicode
//! scalar values, never bytes or UTF-16 units.

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte index of the code point at `index`, or `text.len()` when `index`
/// equals the length. `None` past the end.
pub fn byte_index(text: &str, index: usize) -> Option<usize> {
    let mut count = 0;
    for (byte, _) in text.char_indices() {
        if count == index {
            return Some(byte);
        }
        count += 1;
    }
    (count == index).then_some(text.len())
}

/// Substring by code-point range `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let from = byte_index(text, start)?;
    let to = from + byte_index(&text[from..], end - start)?;
    Some(&text[from..to])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_scalar_value() {
        let s = "a\u{1D11E}b\u{0628}c";
        assert_eq!(char_len(s), 5);
        assert_eq!(char_slice(s, 1, 3), Some("\u{1D11E}b"));
        assert_eq!(char_slice(s, 5, 5), Some(""));
        assert_eq!(char_slice(s, 4, 6), None);
        assert_eq!(char_slice(s, 3, 2), None);
    }
}
