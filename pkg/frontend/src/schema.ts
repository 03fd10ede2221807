/**
 * CSV schemas for the bench outputs.
 *
 * Columns are validated before anything is drawn; the renderer never
 * recomputes the quantities, so a schema failure here is the only
 * guard against plotting garbage.
 */
import Papa from "papaparse";
import { z } from "zod";

export class SchemaError extends Error {}

const num = z
  .string()
  .refine((s) => s.length > 0 && Number.isFinite(Number(s)), {
    message: "expected a finite number",
  })
  .transform(Number);

const intLike = num.refine((x) => Number.isInteger(x), {
  message: "expected an integer",
});

// report cells may be blank when a check was gated off
const optionalNum = z
  .string()
  .transform((s) => (s.length === 0 ? null : Number(s)))
  .refine((x) => x === null || Number.isFinite(x), {
    message: "expected a finite number or blank",
  });

const flag = z
  .enum(["0", "1", ""])
  .transform((s) => (s === "" ? null : s === "1"));

export const maxwl1Row = z.object({
  gamma: num,
  phi: num,
  psi_xi: num,
  psi_xi_inf: num,
  regime: intLike,
  phi_over_psi_inf: num,
});

export const randnormsRow = z.object({
  index: intLike,
  n_components: intLike,
  phi: num,
  two_phi: num,
  psi_xi: num,
  psi_xi_inf: num,
  phi_over_psi_inf: num,
  lower_bound: num,
});

export const reportRow = z
  .object({
    trial: intLike,
    lambda_ds: num,
    lambda_lasso: num,
    theta_kd: num,
    theta_l1: num,
    ds_converged: flag,
    lasso_converged: flag,
    prediction_error_ds: optionalNum,
    prediction_error_lasso: optionalNum,
    lambda_valid_ds: flag,
    lambda_valid_lasso: flag,
    oracle_bound_ds: flag,
    oracle_bound_lasso: flag,
  })
  .passthrough();

export type Maxwl1Row = z.infer<typeof maxwl1Row>;
export type RandnormsRow = z.infer<typeof randnormsRow>;
export type ReportRow = z.infer<typeof reportRow>;

export function parseCsv<T>(text: string, row: z.ZodType<T, z.ZodTypeDef, unknown>): T[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failure: ${parsed.errors[0].message}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError("CSV has no data rows");
  }
  return parsed.data.map((raw, i) => {
    const res = row.safeParse(raw);
    if (!res.success) {
      const issue = res.error.issues[0];
      throw new SchemaError(
        `row ${i + 1}: ${issue.path.join(".")}: ${issue.message}`,
      );
    }
    return res.data;
  });
}
