use crate::error::{Error, Result};

pub const DEFAULT_SAMPLING_RATE: f64 = 360.0;
pub const DEFAULT_GAIN: f64 = 200.0;

/// One signal line of a `.hea` header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub storage_format: u32,
    pub gain: f64,
    pub baseline: i32,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub num_signals: usize,
    pub sampling_rate: f64,
    pub num_samples: u64,
    pub signals: Vec<SignalSpec>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Leading decimal number of a field such as `360/1000(0)` or `212x2`.
fn leading_number(field: &str) -> &str {
    let end = field
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || ((c == '-' || c == '+') && i == 0)))
        .map(|(i, _)| i)
        .unwrap_or(field.len());
    &field[..end]
}

fn parse_record_line(line: &str) -> Result<(String, usize, f64, u64)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(parse_err(format!(
            "record line needs at least name and signal count: `{line}`"
        )));
    }
    // "name/segments" only appears in multi-segment headers; keep the base name.
    let name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    let num_signals: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(format!("bad signal count `{}`", fields[1])))?;
    if num_signals == 0 {
        return Err(parse_err("record declares zero signals"));
    }
    let sampling_rate = match fields.get(2) {
        Some(f) => {
            let num = leading_number(f);
            let rate: f64 = num
                .parse()
                .map_err(|_| parse_err(format!("bad sampling rate `{f}`")))?;
            if rate > 0.0 {
                rate
            } else if rate == 0.0 {
                DEFAULT_SAMPLING_RATE
            } else {
                return Err(parse_err(format!("negative sampling rate `{f}`")));
            }
        }
        None => DEFAULT_SAMPLING_RATE,
    };
    let num_samples = match fields.get(3) {
        Some(f) => f
            .parse()
            .map_err(|_| parse_err(format!("bad sample count `{f}`")))?,
        None => 0,
    };
    Ok((name, num_signals, sampling_rate, num_samples))
}

fn parse_signal_line(line: &str) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(parse_err(format!("signal line needs file and format: `{line}`")));
    }
    let storage_format: u32 = leading_number(fields[1])
        .parse()
        .map_err(|_| parse_err(format!("bad storage format `{}`", fields[1])))?;

    let mut gain = DEFAULT_GAIN;
    let mut explicit_baseline = None;
    if let Some(g) = fields.get(2) {
        let value: f64 = leading_number(g)
            .parse()
            .map_err(|_| parse_err(format!("bad gain `{g}`")))?;
        if value < 0.0 {
            return Err(parse_err(format!("negative gain `{g}`")));
        }
        if value > 0.0 {
            gain = value;
        }
        if let (Some(open), Some(close)) = (g.find('('), g.find(')')) {
            let b = &g[open + 1..close];
            explicit_baseline = Some(
                b.parse::<i32>()
                    .map_err(|_| parse_err(format!("bad baseline in `{g}`")))?,
            );
        }
    }
    // Without an explicit (baseline), WFDB uses the ADC zero field.
    let adc_zero = match fields.get(4) {
        Some(z) => Some(
            z.parse::<i32>()
                .map_err(|_| parse_err(format!("bad ADC zero `{z}`")))?,
        ),
        None => None,
    };
    let baseline = explicit_baseline.or(adc_zero).unwrap_or(0);
    let description = (fields.len() > 8).then(|| fields[8..].join(" "));

    Ok(SignalSpec {
        file_name: fields[0].to_string(),
        storage_format,
        gain,
        baseline,
        description,
    })
}

/// Parses the text of a WFDB `.hea` header. Comment lines (`#`) and blank
/// lines are ignored.
pub fn parse_header<S: AsRef<str>>(lines: &[S]) -> Result<RecordHeader> {
    let mut content = lines
        .iter()
        .map(|l| l.as_ref().trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let first = content.next().ok_or_else(|| parse_err("empty header"))?;
    let (record_name, num_signals, sampling_rate, num_samples) = parse_record_line(first)?;

    let signals = content
        .take(num_signals)
        .map(parse_signal_line)
        .collect::<Result<Vec<_>>>()?;
    if signals.len() != num_signals {
        return Err(parse_err(format!(
            "header declares {num_signals} signals but has {} signal lines",
            signals.len()
        )));
    }

    Ok(RecordHeader {
        record_name,
        num_signals,
        sampling_rate,
        num_samples,
        signals,
    })
}
