use std::collections::HashMap;
use std::io::{Read, Write};

use super::columns as col;
use super::TransactionRecord;
use crate::error::{Error, Result};

/// Records read from a CSV plus the number of rows dropped in lenient mode.
#[derive(Debug, Clone, Default)]
pub struct Parsed {
    pub records: Vec<TransactionRecord>,
    pub skipped: usize,
}

/// Parses a transaction CSV.
///
/// Header columns are matched by name in any order; unrecognised columns are
/// ignored. In strict mode the first bad row aborts with its line number,
/// otherwise bad rows are counted in [`Parsed::skipped`].
pub fn parse_transactions<R: Read>(source: R, strict: bool) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let index: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();
    let mut positions = [0usize; col::ALL.len()];
    for (slot, name) in positions.iter_mut().zip(col::ALL) {
        *slot = *index
            .get(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut out = Parsed::default();
    for (row_no, row) in reader.records().enumerate() {
        let parsed = row.map_err(Error::from).and_then(|row| {
            let line = row.position().map_or(row_no as u64 + 2, |p| p.line());
            let fields = RowFields {
                row: &row,
                positions: &positions,
                line,
            };
            fields.record()
        });
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(e) if strict => return Err(e),
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

struct RowFields<'a> {
    row: &'a csv::StringRecord,
    positions: &'a [usize; col::ALL.len()],
    line: u64,
}

impl RowFields<'_> {
    fn raw(&self, name: &'static str) -> Result<&str> {
        let slot = col::ALL.iter().position(|c| *c == name).unwrap();
        self.row
            .get(self.positions[slot])
            .map(str::trim)
            .ok_or_else(|| self.err(name, "field missing from row"))
    }

    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn int<T: std::str::FromStr>(&self, name: &'static str) -> Result<T> {
        let s = self.raw(name)?;
        s.parse()
            .map_err(|_| self.err(name, format!("expected an integer, got {s:?}")))
    }

    fn ranged(&self, name: &'static str, lo: u8, hi: u8) -> Result<u8> {
        let v: u8 = self.int(name)?;
        if v < lo || v > hi {
            return Err(self.err(name, format!("{v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn record(&self) -> Result<TransactionRecord> {
        let amount_raw = self.raw(col::AMOUNT)?;
        let amount = parse_amount(amount_raw)
            .ok_or_else(|| self.err(col::AMOUNT, format!("unparseable amount {amount_raw:?}")))?;

        let zip_raw = self.raw(col::ZIP)?;
        let zip = if zip_raw.is_empty() {
            None
        } else {
            Some(
                parse_zip(zip_raw)
                    .ok_or_else(|| self.err(col::ZIP, format!("bad postal code {zip_raw:?}")))?,
            )
        };

        let label = self.raw(col::IS_FRAUD)?;
        let is_fraud = if label.eq_ignore_ascii_case("yes") {
            true
        } else if label.eq_ignore_ascii_case("no") {
            false
        } else {
            return Err(self.err(col::IS_FRAUD, format!("label {label:?} is neither Yes nor No")));
        };

        let card_id = self.raw(col::CARD_ID)?;
        if card_id.is_empty() {
            return Err(self.err(col::CARD_ID, "empty card id"));
        }
        let errors = self.raw(col::ERRORS)?;

        Ok(TransactionRecord {
            year: self.int(col::YEAR)?,
            month: self.ranged(col::MONTH, 1, 12)?,
            day: self.ranged(col::DAY, 1, 31)?,
            amount,
            use_chip: self.raw(col::USE_CHIP)?.to_string(),
            merchant_name: self.int(col::MERCHANT_NAME)?,
            merchant_city: self.raw(col::MERCHANT_CITY)?.to_string(),
            merchant_state: self.raw(col::MERCHANT_STATE)?.to_string(),
            zip,
            mcc: self.int(col::MCC)?,
            errors: (!errors.is_empty()).then(|| errors.to_string()),
            is_fraud,
            card_id: card_id.to_string(),
            hour: self.ranged(col::HOUR, 0, 23)?,
            minute: self.ranged(col::MINUTE, 0, 59)?,
        })
    }
}

/// Accepts `12.50`, `$12.50`, `$-12.50` and `-$12.50`.
fn parse_amount(s: &str) -> Option<f64> {
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix('$').unwrap_or(rest);
    let v: f64 = rest.parse().ok()?;
    if !v.is_finite() || (neg && rest.starts_with('-')) {
        return None;
    }
    Some(if neg { -v } else { v })
}

/// Postal codes arrive as integers or as whole floats (`91750.0`).
fn parse_zip(s: &str) -> Option<u32> {
    if let Ok(v) = s.parse::<u32>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    (f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f <= u32::MAX as f64).then_some(f as u32)
}

/// Writes records in the column order of [`col::ALL`].
pub fn write_transactions<W: Write>(sink: W, records: &[TransactionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(col::ALL)?;
    for r in records {
        let amount = if r.amount < 0.0 {
            format!("$-{:.2}", -r.amount)
        } else {
            format!("${:.2}", r.amount)
        };
        w.write_record([
            r.year.to_string(),
            r.month.to_string(),
            r.day.to_string(),
            amount,
            r.use_chip.clone(),
            r.merchant_name.to_string(),
            r.merchant_city.clone(),
            r.merchant_state.clone(),
            r.zip.map(|z| z.to_string()).unwrap_or_default(),
            r.mcc.to_string(),
            r.errors.clone().unwrap_or_default(),
            if r.is_fraud { "Yes" } else { "No" }.to_string(),
            r.card_id.clone(),
            r.hour.to_string(),
            r.minute.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "Year,Month,Day,Amount,Use Chip,Merchant Name,Merchant City,Merchant State,Zip,MCC,Errors?,Is Fraud?,card_id,Hour,Minute";

    fn row(amount: &str, label: &str) -> String {
        format!(
            "2019,3,14,{amount},Chip Transaction,-727612092139916043,Monterey Park,CA,91754.0,5411,,{label},4344676511950444_0,6,21"
        )
    }

    #[test]
    fn header_only_is_empty() {
        let p = parse_transactions(HEADER.as_bytes(), true).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn yes_label_is_fraud() {
        let csv = format!("{HEADER}\n{}\n", row("$134.09", "Yes"));
        let p = parse_transactions(csv.as_bytes(), true).unwrap();
        let r = &p.records[0];
        assert!(r.is_fraud);
        assert_eq!(r.amount, 134.09);
        assert_eq!(r.zip, Some(91754));
        assert_eq!(r.merchant_name, -727612092139916043);
        assert_eq!(r.errors, None);
    }

    #[test]
    fn labels_are_case_insensitive() {
        let csv = format!("{HEADER}\n{}\n{}\n", row("1", "yES"), row("1", "no"));
        let p = parse_transactions(csv.as_bytes(), true).unwrap();
        assert!(p.records[0].is_fraud);
        assert!(!p.records[1].is_fraud);
    }

    #[test]
    fn bad_amount_names_line_and_column() {
        let csv = format!("{HEADER}\n{}\n", row("abc", "No"));
        match parse_transactions(csv.as_bytes(), true) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "Amount");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips() {
        let csv = format!(
            "{HEADER}\n{}\n{}\n{}\n",
            row("abc", "No"),
            row("$1.00", "Maybe"),
            row("$-77.00", "No")
        );
        let p = parse_transactions(csv.as_bytes(), false).unwrap();
        assert_eq!(p.skipped, 2);
        assert_eq!(p.records[0].amount, -77.0);
    }

    #[test]
    fn bad_label_is_an_error() {
        let csv = format!("{HEADER}\n{}\n", row("$1.00", "Maybe"));
        assert!(matches!(
            parse_transactions(csv.as_bytes(), true),
            Err(Error::Parse { column, .. }) if column == "Is Fraud?"
        ));
    }

    #[test]
    fn missing_column_is_reported() {
        let header = HEADER.replace(",MCC", "");
        assert!(matches!(
            parse_transactions(header.as_bytes(), true),
            Err(Error::MissingColumn(c)) if c == "MCC"
        ));
    }

    #[test]
    fn header_order_and_extra_columns_are_ignored() {
        let csv = "Minute,Hour,card_id,Yours,Is Fraud?,Errors?,MCC,Zip,Merchant State,Merchant City,Merchant Name,Use Chip,Amount,Day,Month,Year\n\
                   5,23,c1,xx,No,\"Bad PIN,\",5812,,,ONLINE,42,Online Transaction,$3.50,2,12,2018\n";
        let p = parse_transactions(csv.as_bytes(), true).unwrap();
        let r = &p.records[0];
        assert_eq!((r.hour, r.minute, r.month, r.day), (23, 5, 12, 2));
        assert_eq!(r.errors.as_deref(), Some("Bad PIN,"));
        assert_eq!(r.zip, None);
        assert_eq!(r.merchant_state, "");
    }

    #[test]
    fn out_of_range_fields_rejected() {
        let csv = format!("{HEADER}\n{}\n", row("$1", "No").replace(",6,21", ",24,21"));
        assert!(parse_transactions(csv.as_bytes(), true).is_err());
        let csv = format!("{HEADER}\n{}\n", row("$1", "No").replace("2019,3,", "2019,13,"));
        assert!(parse_transactions(csv.as_bytes(), true).is_err());
    }

    #[test]
    fn amount_forms() {
        assert_eq!(parse_amount("$-77.00"), Some(-77.0));
        assert_eq!(parse_amount("-$5.5"), Some(-5.5));
        assert_eq!(parse_amount("12"), Some(12.0));
        assert_eq!(parse_amount("--1"), None);
        assert_eq!(parse_amount("$inf"), None);
    }

    #[test]
    fn write_then_parse_round_trips() {
        let csv = format!(
            "{HEADER}\n{}\n{}\n",
            row("$134.09", "Yes"),
            row("$-0.50", "No")
        );
        let first = parse_transactions(csv.as_bytes(), true).unwrap().records;
        let mut buf = Vec::new();
        write_transactions(&mut buf, &first).unwrap();
        let second = parse_transactions(buf.as_slice(), true).unwrap().records;
        assert_eq!(first, second);
    }
}
