/**
 * Writer for the shared feature-table CSV consumed by the training pipeline:
 * header `id,label,f0,...,f{d-1}`, UTF-8, `\n` newlines, no quoting. Values
 * are serialized with JavaScript's shortest exact float64 representation,
 * which round-trips bit-for-bit through any IEEE-754 parser.
 */

export function renderFeatureCsv(
  ids: string[],
  labels: string[],
  rows: Float64Array[],
): string {
  if (ids.length !== labels.length || ids.length !== rows.length) {
    throw new Error(
      `length mismatch: ${ids.length} ids, ${labels.length} labels, ${rows.length} rows`,
    );
  }
  const dim = rows.length > 0 ? rows[0].length : 0;
  const header = ["id", "label", ...Array.from({ length: dim }, (_, j) => `f${j}`)];
  const lines = [header.join(",")];
  for (let i = 0; i < rows.length; i++) {
    if (ids[i].includes(",") || labels[i].includes(",")) {
      throw new Error(`row ${i}: ids and labels must not contain commas`);
    }
    if (rows[i].length !== dim) {
      throw new Error(`row ${i}: width ${rows[i].length} differs from ${dim}`);
    }
    const cells = new Array<string>(rows[i].length);
    for (let j = 0; j < rows[i].length; j++) {
      const v = rows[i][j];
      if (!Number.isFinite(v)) {
        throw new Error(`row ${i}, column f${j}: non-finite value`);
      }
      cells[j] = String(v);
    }
    lines.push(`${ids[i]},${labels[i]},${cells.join(",")}`);
  }
  return lines.join("\n") + "\n";
}
