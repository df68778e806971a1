export { GridFormatError, GridHandle, loadGrid, QueryMode } from "./grid";
export {
  DEFAULT_REWARD_CONFIG,
  RewardBatch,
  RewardConfig,
  rewardBatch,
} from "./reward";
