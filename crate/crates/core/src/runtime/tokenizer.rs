//! Byte-level tokenizer: token ids 0..=255 are raw bytes. An optional
//! display vocabulary maps higher ids to strings; otherwise they render as
//! `<|id|>` markers.

pub fn tokenize(text: &str) -> Vec<u32> {
    text.bytes().map(u32::from).collect()
}

pub fn detokenize(tokens: &[u32], vocab: Option<&[String]>) -> String {
    let mut out = String::new();
    let mut bytes = Vec::new();
    let flush = |bytes: &mut Vec<u8>, out: &mut String| {
        if !bytes.is_empty() {
            out.push_str(&String::from_utf8_lossy(bytes));
            bytes.clear();
        }
    };
    for &t in tokens {
        if t < 256 {
            bytes.push(t as u8);
        } else {
            flush(&mut bytes, &mut out);
            match vocab.and_then(|v| v.get(t as usize)) {
                Some(s) => out.push_str(s),
                None => out.push_str(&format!("<|{t}|>")),
            }
        }
    }
    flush(&mut bytes, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip() {
        let text = "hello, résumé";
        assert_eq!(detokenize(&tokenize(text), None), text);
    }

    #[test]
    fn high_tokens_render_as_markers() {
        assert_eq!(detokenize(&[104, 105, 300], None), "hi<|300|>");
    }
}
