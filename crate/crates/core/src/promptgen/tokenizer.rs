use crate::error::{Error, Result};

/// Byte-level vocabulary size; matches the backbone's embedding table.
pub const VOCAB_SIZE: usize = 256;

/// One id per UTF-8 byte.
pub fn tokenize(text: &str) -> Vec<usize> {
    text.bytes().map(usize::from).collect()
}

pub fn detokenize(ids: &[usize]) -> Result<String> {
    let bytes = ids
        .iter()
        .map(|&id| u8::try_from(id).map_err(|_| Error::shape(format!("token id {id} outside vocabulary"))))
        .collect::<Result<Vec<u8>>>()?;
    String::from_utf8(bytes).map_err(|e| Error::data(format!("tokens are not UTF-8: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes() {
        assert_eq!(tokenize("ab"), vec![97, 98]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("é"), vec![0xC3, 0xA9]);
    }

    #[test]
    fn out_of_range_id() {
        assert!(detokenize(&[300]).is_err());
    }
}
