export { readNpy, readNpyHeader, readNpyInto } from "./npy";
export type { NpyHeader } from "./npy";
export { runCli, optionFlags, VoxmolCliError } from "./cli";
export type { CliOptions } from "./cli";
export { Provider } from "./provider";
export type { BoundExample, ProviderOptions } from "./provider";
export { GridMaker } from "./gridmaker";
export type { ForwardOptions, GridMakerOptions, GridResult } from "./gridmaker";
export { Quaternion, Transform } from "./transform";
export type { Vec3 } from "./transform";
